"""Independent reference computations used as test oracles.

Nothing here imports the solver or spectrum internals; each oracle is a
separate transcription of the underlying physics.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import expm

HBAR = 6.62607015e-34 / (2.0 * math.pi)  # exact SI definition of h
C_LIGHT = 299792458.0


def hamiltonian(a, delta_p, delta_si):
    """Real Hamiltonian whose Wirtinger gradient generates the mean-field flow."""
    ap, as_, ai = a
    n = np.abs(a) ** 2
    return (
        delta_p * n[0]
        + delta_si * (n[1] + n[2])
        - 0.5 * np.sum(n**2)
        - 2.0 * (n[0] * n[1] + n[0] * n[2] + n[1] * n[2])
        - 2.0 * np.real(ap * ap * np.conj(as_) * np.conj(ai))
    )


def rhs_from_hamiltonian(a, F2, delta_p, d3, h=1e-2):
    """``da_j = -a_j - i dH/da_j* + F delta_jp``.

    The five-point stencil is exact for the quartic Hamiltonian, so the
    only error is floating-point rounding.
    """
    a = np.asarray(a, dtype=complex)
    ds = delta_p - 0.5 * d3
    out = np.empty(3, dtype=complex)
    for j in range(3):
        grads = []
        for direction in (1.0, 1j):
            e = np.zeros(3, dtype=complex)
            e[j] = direction * h
            f = lambda t: hamiltonian(a + t * e / h, delta_p, ds)
            grads.append((-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h))
        # dH/da* = (dH/dx + i dH/dy) / 2
        out[j] = 0.5 * (grads[0] + 1j * grads[1])
    return -a - 1j * out + np.array([math.sqrt(F2), 0.0, 0.0])


def cardano_pump_roots(F2, delta_p):
    """Real non-negative roots of ``u (1 + (delta_p - u)^2) = F2`` in closed form."""
    # u^3 - 2 d u^2 + (1 + d^2) u - F2 = 0 ; shift u = t + 2d/3
    d = delta_p
    b, c, e = -2.0 * d, 1.0 + d * d, -F2
    p = c - b * b / 3.0
    q = 2.0 * b**3 / 27.0 - b * c / 3.0 + e
    shift = -b / 3.0
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    if disc > 0:
        sq = math.sqrt(disc)
        roots = [math.copysign(abs(-q / 2 + sq) ** (1 / 3), -q / 2 + sq) + math.copysign(abs(-q / 2 - sq) ** (1 / 3), -q / 2 - sq)]
    else:
        r = math.sqrt(-p / 3.0)
        arg = max(-1.0, min(1.0, 3.0 * q / (2.0 * p) * math.sqrt(-3.0 / p))) if p != 0 else 0.0
        phi = math.acos(arg)
        roots = [2.0 * r * math.cos((phi - 2.0 * math.pi * k) / 3.0) for k in range(3)]
    return sorted(t + shift for t in roots if t + shift >= -1e-12)


def _bisect(f, a, b, iters=200):
    fa = f(a)
    for _ in range(iters):
        m = 0.5 * (a + b)
        fm = f(m)
        if (fm < 0) == (fa < 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def oscillating_pump_drive(u, v, delta_p, d3):
    """``|F|^2`` required to hold ``(A_p^2, A^2) = (u, v)`` with the signal equation satisfied.

    Returns ``None`` when the signal condition cannot be met.
    """
    ds = delta_p - 0.5 * d3
    c = ds - 2.0 * u - 3.0 * v
    phase = complex(c, -1.0) / u  # exp(2 i theta_p) with theta_s = theta_i = 0
    if abs(abs(phase) - 1.0) > 1e-9:
        return None
    ap = math.sqrt(u) * np.exp(0.5j * np.angle(phase))
    f = (1 + 1j * delta_p) * ap - 1j * (u + 4.0 * v) * ap - 2j * np.conj(ap) * v
    return abs(f) ** 2


def brute_force_oscillating(F2, delta_p, d3, v_max=30.0, n_v=6000):
    """All ``(A_p^2, A^2)`` pairs solving the oscillating steady state.

    Outer dense scan over ``A^2``; for each value the signal condition
    ``u^2 = 1 + (c - 2u)^2`` is solved for ``u`` by bisection on its two
    branches, and the pump-drive mismatch is then bisected along ``A^2``.
    """
    ds = delta_p - 0.5 * d3

    def u_roots(v):
        c = ds - 3.0 * v
        g = lambda u: u * u - 1.0 - (c - 2.0 * u) ** 2
        # downward parabola in u with vertex at 2c/3 and g(0) < 0
        top = 2.0 * c / 3.0
        if top <= 0.0 or g(top) < 0.0:
            return None
        return _bisect(g, 0.0, top), _bisect(g, top, top + abs(c) + 10.0)

    results = []
    grid = np.linspace(1e-9, v_max, n_v)
    for branch in (0, 1):
        def mismatch(v):
            roots = u_roots(v)
            if roots is None:
                return None
            req = oscillating_pump_drive(roots[branch], v, delta_p, d3)
            return None if req is None else req - F2

        vals = [mismatch(v) for v in grid]
        for k in range(n_v - 1):
            a, b = vals[k], vals[k + 1]
            if a is None or b is None or (a < 0) == (b < 0):
                continue
            v = _bisect(mismatch, grid[k], grid[k + 1])
            results.append((u_roots(v)[branch], v))
    return sorted(results)


def real_jacobian(f, a, h=1e-3):
    """6x6 Jacobian of ``f`` in the variables (Re a_p, Im a_p, Re a_s, ...), five-point stencil."""
    a = np.asarray(a, dtype=complex)
    jac = np.empty((6, 6))
    for col in range(6):
        e = np.zeros(3, dtype=complex)
        e[col // 2] = 1.0 if col % 2 == 0 else 1j
        g = lambda t: f(a + t * e)
        d = (-g(2 * h) + 8 * g(h) - 8 * g(-h) + g(-2 * h)) / (12 * h)
        jac[0::2, col] = d.real
        jac[1::2, col] = d.imag
    return jac


S2 = 1.0 / math.sqrt(2.0)

# declared quadratures (y_p, x_p, y_+, x_+, y_-, x_-) in terms of (x_p, y_p, x_s, y_s, x_i, y_i)
DECLARED_FROM_MODES = np.array(
    [
        [0, 1, 0, 0, 0, 0],
        [1, 0, 0, 0, 0, 0],
        [0, 0, 0, S2, 0, S2],
        [0, 0, S2, 0, S2, 0],
        [0, 0, 0, S2, 0, -S2],
        [0, 0, S2, 0, -S2, 0],
    ]
)


def drift_oracle(rhs, alpha, phases):
    """Quadrature drift in the declared ordering from finite differences of ``rhs``."""
    jac = real_jacobian(rhs, alpha)
    # (Re, Im) of delta a_j = R(theta_j) (x_j, y_j) / sqrt(2)
    b = np.zeros((6, 6))
    for j, th in enumerate(phases):
        c, s = math.cos(th), math.sin(th)
        b[2 * j : 2 * j + 2, 2 * j : 2 * j + 2] = np.array([[c, -s], [s, c]]) * S2
    mode = np.linalg.solve(b, jac @ b)
    return DECLARED_FROM_MODES @ mode @ DECLARED_FROM_MODES.T


OMEGA_MODES = np.kron(np.eye(3), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def random_symplectic(rng, n_modes, scale=0.6):
    omega = np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))
    h = rng.standard_normal((2 * n_modes, 2 * n_modes)) * scale
    return expm(omega @ (h + h.T) / 2.0)


def random_gaussian_cov(rng, n_modes):
    """Physical covariance (vacuum 1/2) in per-mode (x, y) ordering."""
    s = random_symplectic(rng, n_modes)
    nu = 1.0 + rng.exponential(0.5, n_modes)
    return 0.5 * s @ np.diag(np.repeat(nu, 2)) @ s.T


def random_separable_cov(rng, single, n_components=3):
    """Mixture of states that are products across ``single | rest``.

    Returned in per-mode (x_p, y_p, x_s, y_s, x_i, y_i) ordering.
    """
    k = "psi".index(single)
    rest = [m for m in range(3) if m != k]
    order = [2 * k, 2 * k + 1] + [2 * m + q for m in rest for q in (0, 1)]
    total = np.zeros((6, 6))
    weights = rng.dirichlet(np.ones(n_components))
    means = []
    for w in weights:
        block = np.zeros((6, 6))
        block[:2, :2] = random_gaussian_cov(rng, 1)
        block[2:, 2:] = random_gaussian_cov(rng, 2)
        perm = np.zeros((6, 6))
        perm[order, np.arange(6)] = 1.0
        total += w * perm @ block @ perm.T
        means.append(rng.standard_normal(6) * 0.3)
    means = np.array(means)
    mu = weights @ means
    total += sum(w * np.outer(m - mu, m - mu) for w, m in zip(weights, means))
    return total


def to_declared(cov_modes):
    return DECLARED_FROM_MODES @ cov_modes @ DECLARED_FROM_MODES.T


def two_mode_squeezed(r, n_th=0.0):
    """Signal-idler two-mode squeezed thermal state with vacuum pump (per-mode ordering)."""
    a = (n_th + 0.5) * math.cosh(2 * r)
    b = (n_th + 0.5) * math.sinh(2 * r)
    cov = 0.5 * np.eye(6)
    cov[2:, 2:] = np.array(
        [
            [a, 0, b, 0],
            [0, a, 0, -b],
            [b, 0, a, 0],
            [0, -b, 0, a],
        ]
    )
    return cov


def ppt_symplectic_min(cov4):
    """Smallest symplectic eigenvalue of the partial transpose of a two-mode covariance."""
    t = np.diag([1.0, 1.0, 1.0, -1.0])
    pt = t @ cov4 @ t
    omega = np.kron(np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]))
    return float(np.min(np.abs(np.linalg.eigvals(1j * omega @ pt))))
