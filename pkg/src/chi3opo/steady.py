"""Classical mean-field steady states of the three-mode chi(3) resonator.

The normalized mean-field equations (time in units of 1/Gamma) are::

    dA_p/dt = -(1 + i dp) A_p + i[(|A_p|^2 + 2|A_s|^2 + 2|A_i|^2) A_p + 2 A_p* A_s A_i] + F
    dA_s/dt = -(1 + i ds) A_s + i[(2|A_p|^2 + |A_s|^2 + 2|A_i|^2) A_s + A_p^2 A_i*]
    dA_i/dt = -(1 + i ds) A_i + i[(2|A_p|^2 + 2|A_s|^2 + |A_i|^2) A_i + A_p^2 A_s*]

with ``ds = dp - d3/2``. Above threshold, writing ``u = |A_p|^2`` and
``v = |A_s|^2 = |A_i|^2``, the signal equation forces
``u^2 = 1 + (ds - 2u - 3v)^2``. Solving that for ``v`` leaves a single
scalar equation ``F^2 = P(u)`` on each of its two branches, which is
bracketed on a dense grid and refined with Brent's method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np
from scipy.optimize import brentq

from .params import ComplexAmplitude, NormalizedParams

__all__ = [
    "SteadyState",
    "SweepResult",
    "classical_rhs",
    "pump_only_residual",
    "solve_pump_only",
    "solve_oscillating",
    "solve_all",
    "sweep_power",
    "OSCILLATION_FLOOR",
]

OSCILLATION_FLOOR = 1e-8
RESIDUAL_TOL = 1e-10

BranchKind = Literal["pump-only", "oscillating"]


def classical_rhs(alpha: Sequence[complex], n: NormalizedParams) -> np.ndarray:
    """Time derivative of the mean fields ``(A_p, A_s, A_i)``."""
    ap, as_, ai = (complex(a) for a in alpha)
    np_, ns, ni = abs(ap) ** 2, abs(as_) ** 2, abs(ai) ** 2
    ds = n.delta_si
    dp = -(1 + 1j * n.delta_p) * ap + 1j * ((np_ + 2 * ns + 2 * ni) * ap + 2 * ap.conjugate() * as_ * ai) + n.drive
    dsig = -(1 + 1j * ds) * as_ + 1j * ((2 * np_ + ns + 2 * ni) * as_ + ap * ap * ai.conjugate())
    didl = -(1 + 1j * ds) * ai + 1j * ((2 * np_ + 2 * ns + ni) * ai + ap * ap * as_.conjugate())
    return np.array([dp, dsig, didl], dtype=complex)


@dataclass(frozen=True)
class SteadyState:
    """One fixed point of the mean-field equations.

    ``stable`` is filled in by :func:`chi3opo.fluctuations.stability`
    through the solvers; construct states through the solvers rather than
    by hand.
    """

    pump: ComplexAmplitude
    signal: ComplexAmplitude
    idler: ComplexAmplitude
    branch_kind: BranchKind
    params: NormalizedParams
    stable: bool = True
    eigenvalues: tuple[complex, ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self) -> None:
        if abs(self.signal.modulus - self.idler.modulus) > 1e-9 * max(1.0, self.signal.modulus):
            raise ValueError("signal and idler moduli must be equal")

    @property
    def alpha(self) -> np.ndarray:
        return np.array([self.pump.value, self.signal.value, self.idler.value])

    @property
    def pump_intensity(self) -> float:
        return self.pump.intensity

    @property
    def signal_intensity(self) -> float:
        return self.signal.intensity

    @property
    def phases(self) -> np.ndarray:
        return np.array([self.pump.phase, self.signal.phase, self.idler.phase])

    def residual(self) -> float:
        return float(np.max(np.abs(classical_rhs(self.alpha, self.params))))

    def swapped(self) -> "SteadyState":
        """The same state with signal and idler exchanged."""
        return SteadyState(
            self.pump, self.idler, self.signal, self.branch_kind, self.params, self.stable, self.eigenvalues
        )


@dataclass(frozen=True)
class SweepResult:
    """Steady states along a one-dimensional parameter axis.

    ``branches[k]`` holds the states found at ``axis[k]``; ``branch_ids[k]``
    labels them consistently from one grid point to the next.
    """

    axis_name: str
    axis: tuple[float, ...]
    branches: tuple[tuple[SteadyState, ...], ...]
    branch_ids: tuple[tuple[int, ...], ...]

    def __len__(self) -> int:
        return len(self.axis)


def _classify(state: SteadyState) -> SteadyState:
    # local import: fluctuations depends on this module
    from .fluctuations import linearize, stability

    stable, eigs = stability(linearize(state))
    return SteadyState(
        state.pump, state.signal, state.idler, state.branch_kind, state.params, stable, tuple(eigs)
    )


def pump_only_residual(u: float, n: NormalizedParams) -> float:
    """Kerr cubic ``u [1 + (dp - u)^2] - F^2`` for the intracavity pump power u."""
    return u * (1.0 + (n.delta_p - u) ** 2) - n.F2


def _pump_only_roots(n: NormalizedParams) -> list[float]:
    dp, f2 = n.delta_p, n.F2
    if f2 == 0.0:
        return [0.0]
    coeffs = [1.0, -2.0 * dp, 1.0 + dp * dp, -f2]
    roots = []
    for r in np.roots(coeffs):
        if abs(r.imag) > 1e-6 * max(1.0, abs(r)):
            continue
        u = float(r.real)
        # Newton polish on the cubic
        for _ in range(50):
            g = pump_only_residual(u, n)
            dg = 1.0 + (dp - u) ** 2 - 2.0 * u * (dp - u)
            if dg == 0.0:
                break
            step = g / dg
            u -= step
            if abs(step) <= 1e-15 * max(1.0, abs(u)):
                break
        if u >= 0.0 and abs(pump_only_residual(u, n)) <= 1e-9 * max(1.0, f2):
            roots.append(u)
    roots.sort()
    unique: list[float] = []
    for u in roots:
        if not unique or abs(u - unique[-1]) > 1e-9 * max(1.0, u):
            unique.append(u)
    return unique


def solve_pump_only(n: NormalizedParams, classify: bool = True) -> list[SteadyState]:
    """All states with empty signal and idler, ordered by pump power.

    Between one and three roots (Kerr bistability needs ``delta_p > sqrt(3)``).
    """
    states = []
    for u in _pump_only_roots(n):
        ap = n.drive / complex(1.0, n.delta_p - u)
        state = SteadyState(
            ComplexAmplitude.from_complex(ap),
            ComplexAmplitude(0.0, 0.0),
            ComplexAmplitude(0.0, 0.0),
            "pump-only",
            n,
        )
        states.append(_classify(state) if classify else state)
    return states


def _branch_v(u: np.ndarray | float, ds: float, sigma: int):
    s = np.sqrt(np.maximum(np.asarray(u, dtype=float) ** 2 - 1.0, 0.0))
    return (ds - 2.0 * u - sigma * s) / 3.0, sigma * s


def _branch_power(u, n: NormalizedParams, sigma: int):
    """F^2 required to sustain pump power ``u`` on branch ``sigma``."""
    v, dprime = _branch_v(u, n.delta_si, sigma)
    r = v / u
    return u * ((1.0 + 2.0 * r) ** 2 + (n.delta_p - u - 4.0 * v - 2.0 * r * dprime) ** 2)


def _branch_interval(ds: float, sigma: int) -> tuple[float, float] | None:
    """Range of u on which branch ``sigma`` has v > 0."""
    disc = ds * ds - 3.0
    if disc < 0.0:
        return None
    lo_root = (2.0 * ds - math.sqrt(disc)) / 3.0
    hi_root = (2.0 * ds + math.sqrt(disc)) / 3.0
    if sigma < 0:
        # v > 0  <=>  2u - sqrt(u^2 - 1) < ds
        start = 1.0 if ds > 2.0 else lo_root
        return (max(start, 1.0), hi_root)
    # v > 0  <=>  2u + sqrt(u^2 - 1) < ds, only reachable when ds > 2
    if ds <= 2.0:
        return None
    return (1.0, lo_root)


def _oscillating_pairs(n: NormalizedParams, samples: int = 4001) -> list[tuple[float, float, int]]:
    f2 = n.F2
    found: list[tuple[float, float, int]] = []
    for sigma in (-1, 1):
        span = _branch_interval(n.delta_si, sigma)
        if span is None:
            continue
        lo, hi = span
        # cosine spacing concentrates points near both ends, where v -> 0 or
        # the branch folds at u = 1
        t = 0.5 * (1.0 - np.cos(np.linspace(0.0, math.pi, samples)))
        us = lo + (hi - lo) * t
        g = _branch_power(us, n, sigma) - f2
        for k in range(samples - 1):
            a, b = g[k], g[k + 1]
            if a == 0.0:
                roots = [us[k]]
            elif a * b < 0.0:
                roots = [brentq(lambda x: float(_branch_power(x, n, sigma)) - f2, us[k], us[k + 1], xtol=1e-15, rtol=1e-15)]
            else:
                continue
            for u in roots:
                v, _ = _branch_v(u, n.delta_si, sigma)
                v = float(v)
                if v > OSCILLATION_FLOOR:
                    found.append((float(u), v, sigma))
    found.sort()
    unique: list[tuple[float, float, int]] = []
    for item in found:
        if not unique or abs(item[0] - unique[-1][0]) + abs(item[1] - unique[-1][1]) > 1e-6:
            unique.append(item)
    return unique


def _oscillating_state(u: float, v: float, n: NormalizedParams) -> SteadyState:
    ds = n.delta_si
    dprime = ds - 2.0 * u - 3.0 * v
    # phase mismatch 2 th_p - th_s - th_i fixed by the signal equation
    phi = math.atan2(-1.0, dprime)
    r = v / u
    denom = complex(1.0 + 2.0 * r, n.delta_p - u - 4.0 * v - 2.0 * r * dprime)
    ap = n.drive / denom
    theta_p = math.atan2(ap.imag, ap.real)
    theta_si = theta_p - 0.5 * phi
    a = math.sqrt(v)
    state = SteadyState(
        ComplexAmplitude.from_complex(ap),
        ComplexAmplitude(a, theta_si),
        ComplexAmplitude(a, theta_si),
        "oscillating",
        n,
    )
    return _polish(state)


def _polish(state: SteadyState, iterations: int = 8) -> SteadyState:
    """Newton refinement of an oscillating state in (u, v, theta_p, theta_si).

    The closed-form reconstruction is already accurate to rounding; this
    only removes the last few ulps of drift accumulated in the phases.
    """
    n = state.params
    x = np.array([state.pump.modulus, state.signal.modulus, state.pump.phase, state.signal.phase])

    def fields(x):
        return np.array([x[0] * np.exp(1j * x[2]), x[1] * np.exp(1j * x[3]), x[1] * np.exp(1j * x[3])])

    def res(x):
        f = classical_rhs(fields(x), n)
        return np.array([f[0].real, f[0].imag, f[1].real, f[1].imag])

    r = res(x)
    for _ in range(iterations):
        if np.max(np.abs(r)) < 1e-14:
            break
        jac = np.empty((4, 4))
        for k in range(4):
            h = 1e-7 * max(1.0, abs(x[k]))
            e = np.zeros(4)
            e[k] = h
            jac[:, k] = (res(x + e) - res(x - e)) / (2 * h)
        try:
            step = np.linalg.solve(jac, r)
        except np.linalg.LinAlgError:
            break
        trial = x - step
        rt = res(trial)
        if np.max(np.abs(rt)) >= np.max(np.abs(r)):
            break
        x, r = trial, rt
    return SteadyState(
        ComplexAmplitude(abs(x[0]), x[2]),
        ComplexAmplitude(abs(x[1]), x[3]),
        ComplexAmplitude(abs(x[1]), x[3]),
        "oscillating",
        n,
    )


def solve_oscillating(n: NormalizedParams, classify: bool = True) -> list[SteadyState]:
    """All above-threshold states (``A^2 > 1e-8``), ordered by pump power.

    The free signal-idler phase difference is fixed by ``theta_s = theta_i``.
    An empty list means the drive is below threshold (or oscillation is
    impossible, e.g. at ``delta_p = d3 = 0``).
    """
    if n.F2 == 0.0:
        return []
    states = [_oscillating_state(u, v, n) for u, v, _ in _oscillating_pairs(n)]
    states = [s for s in states if s.residual() <= RESIDUAL_TOL]
    return [_classify(s) for s in states] if classify else states


def solve_all(n: NormalizedParams, classify: bool = True) -> list[SteadyState]:
    return solve_pump_only(n, classify) + solve_oscillating(n, classify)


def _match(prev: list[tuple[int, SteadyState]], current: list[SteadyState], next_id: int):
    """Greedy nearest-neighbour assignment of branch ids in (A_p^2, A^2)."""

    def key(s: SteadyState):
        return np.array([s.pump_intensity, s.signal_intensity])

    pairs = []
    for i, (_, ps) in enumerate(prev):
        for j, cs in enumerate(current):
            if ps.branch_kind != cs.branch_kind:
                continue
            pairs.append((float(np.linalg.norm(key(ps) - key(cs))), i, j))
    pairs.sort()
    ids: list[int | None] = [None] * len(current)
    used_prev: set[int] = set()
    for _, i, j in pairs:
        if i in used_prev or ids[j] is not None:
            continue
        ids[j] = prev[i][0]
        used_prev.add(i)
    out = []
    for j, bid in enumerate(ids):
        if bid is None:
            bid = next_id
            next_id += 1
        out.append(bid)
    return out, next_id


def sweep_power(n_base: NormalizedParams, F2_grid: Sequence[float], classify: bool = True) -> SweepResult:
    """Steady states along a monotone grid of pump powers."""
    grid = [float(f) for f in F2_grid]
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("F2_grid must be monotone non-decreasing")
    branches = []
    ids = []
    prev: list[tuple[int, SteadyState]] = []
    next_id = 0
    for f2 in grid:
        states = solve_all(n_base.with_(F2=f2), classify)
        labels, next_id = _match(prev, states, next_id)
        branches.append(tuple(states))
        ids.append(tuple(labels))
        prev = list(zip(labels, states))
    return SweepResult("F2", tuple(grid), tuple(branches), tuple(ids))
