"""Continuous-variable entanglement witnesses on output spectral matrices.

All witnesses are written as ``variance sum - separability bound`` so that a
negative value certifies inseparability. Variances are taken from the
symmetrized spectral matrix (vacuum = 1/2 per quadrature).

For a bipartition ``A|B`` and observables ``u = a.X``, ``v = b.X`` the
separable bound is ``|<[u_A, v_A]>| + |<[u_B, v_B]>|`` (in units where
``[x, y] = i``); with pure position/momentum combinations this is
``|sum_A h_k g_k| + |sum_B h_k g_k|`` and two-mode EPR coefficients give
the familiar bound of 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .fluctuations import MODE_TO_PM, SpectralDensity, to_mode_basis
from .params import QUADRATURES

__all__ = [
    "PARTITIONS",
    "SchmidtRotation2D",
    "SchmidtTransform4D",
    "VlfResult",
    "WitnessReport",
    "duan_witness",
    "schmidt_rotation_2d",
    "rotate_blocks",
    "duan_rotated",
    "schmidt_transform_4d",
    "vlf_witness",
    "schmidt_seeded_witness",
    "vlf_optimize",
    "partition_symmetry_check",
    "witness_report",
]

MODES = ("p", "s", "i")
PARTITIONS = ("p|si", "s|ip", "i|sp")
_DEGENERATE = 1e-14

# commutators in the per-mode basis (x_p, y_p, x_s, y_s, x_i, y_i)
_OMEGA_XY = np.kron(np.eye(3), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def _pm_matrix(s: SpectralDensity | np.ndarray) -> np.ndarray:
    """The 4x4 (y_+, x_+, y_-, x_-) block of a 4x4 or 6x6 spectrum."""
    m = s.matrix if isinstance(s, SpectralDensity) else np.asarray(s, dtype=float)
    return m[2:, 2:] if m.shape == (6, 6) else m


def duan_witness(s4: SpectralDensity | np.ndarray) -> float:
    """``Var(x_-) + Var(y_+) - 1``; negative means signal-idler entanglement."""
    m = _pm_matrix(s4)
    return float(m[3, 3] + m[0, 0] - 1.0)


@dataclass(frozen=True)
class SchmidtRotation2D:
    """Quadrature rotation angles of the sum and difference subspaces.

    The rotation acts as ``y_rot = cos(t) y + sin(t) x``,
    ``x_rot = -sin(t) y + cos(t) x``.
    """

    theta_plus: float
    theta_minus: float

    @property
    def C(self) -> float:
        return math.cos(self.theta_plus - self.theta_minus)


def _rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, s], [-s, c]])


def _principal_angle(block: np.ndarray, squeeze: str) -> float:
    """Angle that diagonalizes ``block`` and puts the smaller variance on ``squeeze``."""
    a, b, d = block[0, 0], block[0, 1], block[1, 1]
    scale = max(abs(a), abs(d), 1.0)
    if abs(b) <= _DEGENERATE * scale and abs(a - d) <= _DEGENERATE * scale:
        return 0.0
    if squeeze == "y":
        theta = 0.5 * math.atan2(-2.0 * b, d - a)
    else:
        theta = 0.5 * math.atan2(2.0 * b, a - d)
    if theta <= -0.5 * math.pi:
        theta += math.pi
    return theta + 0.0


def schmidt_rotation_2d(s4: SpectralDensity | np.ndarray) -> SchmidtRotation2D:
    """Rotation angles making each 2x2 block of the (+, -) spectrum diagonal.

    The angles are chosen so the Duan-type quadratures ``y_+^rot`` and
    ``x_-^rot`` carry the smaller variance of their block. Both angles lie
    in (-pi/2, pi/2]; an isotropic block gives 0.
    """
    m = _pm_matrix(s4)
    return SchmidtRotation2D(_principal_angle(m[0:2, 0:2], "y"), _principal_angle(m[2:4, 2:4], "x"))


def rotate_blocks(s4: SpectralDensity | np.ndarray, rot: SchmidtRotation2D) -> np.ndarray:
    """The (y_+, x_+, y_-, x_-) matrix expressed in rotated quadratures."""
    r = np.zeros((4, 4))
    r[0:2, 0:2] = _rotation(rot.theta_plus)
    r[2:4, 2:4] = _rotation(rot.theta_minus)
    return r @ _pm_matrix(s4) @ r.T


def duan_rotated(s4: SpectralDensity | np.ndarray, rot: SchmidtRotation2D | None = None) -> tuple[float, float]:
    """``Var(x_-^rot) + Var(y_+^rot) - |C|`` with ``C = cos(theta_+ - theta_-)``.

    Returns ``(witness, C)``.
    """
    if rot is None:
        rot = schmidt_rotation_2d(s4)
    m = rotate_blocks(s4, rot)
    c = rot.C
    return float(m[3, 3] + m[0, 0] - abs(c)), c


@dataclass(frozen=True)
class SchmidtTransform4D:
    """Orthogonal eigenbasis of the pump/sum block.

    Rows of ``U`` express the Schmidt quadratures in ``(x_p, y_p, x_+, y_+)``;
    ``xi_variances`` are in ascending order, so rows 0 and 1 are the two
    least noisy combinations.
    """

    U: np.ndarray
    xi_variances: np.ndarray

    def squeezed(self) -> np.ndarray:
        """Rows of the two least noisy Schmidt quadratures."""
        return self.U[:2]


# (x_p, y_p, x_+, y_+) inside the declared 6-dim ordering
_P_PLUS = [QUADRATURES["x_p"], QUADRATURES["y_p"], QUADRATURES["x_+"], QUADRATURES["y_+"]]


def schmidt_transform_4d(s6: SpectralDensity | np.ndarray) -> SchmidtTransform4D:
    m = s6.matrix if isinstance(s6, SpectralDensity) else np.asarray(s6, dtype=float)
    block = m[np.ix_(_P_PLUS, _P_PLUS)]
    block = 0.5 * (block + block.T)
    w, v = np.linalg.eigh(block)
    scale = max(1.0, float(np.max(np.abs(w))))
    if np.max(w) - np.min(w) <= 1e-12 * scale:
        # fully degenerate (e.g. vacuum): every basis works, pick the identity
        return SchmidtTransform4D(np.eye(4), w.copy())
    u = v.T.copy()
    for k in range(4):
        nz = np.flatnonzero(np.abs(u[k]) > 1e-12)
        if nz.size and u[k, nz[0]] < 0:
            u[k] = -u[k]
    return SchmidtTransform4D(u, w.copy())


def _as_vector(coeffs: Sequence[float], kind: str) -> np.ndarray:
    c = np.asarray(coeffs, dtype=float)
    if c.shape == (6,):
        return c
    if c.shape != (3,):
        raise ValueError(f"coefficients must have length 3 or 6, got shape {c.shape}")
    out = np.zeros(6)
    out[[0, 2, 4] if kind == "x" else [1, 3, 5]] = c
    return out


def _parse_partition(partition: str) -> tuple[str, str]:
    if partition not in PARTITIONS:
        aliases = {"p|is": "p|si", "s|pi": "s|ip", "i|ps": "i|sp"}
        if partition not in aliases:
            raise ValueError(f"unknown partition {partition!r}; expected one of {PARTITIONS}")
        partition = aliases[partition]
    single, rest = partition.split("|")
    return single, rest


def _commutator_parts(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Per-mode commutator coefficients ``[u_k, v_k] / i`` for k = p, s, i."""
    prod = u[:, None] * _OMEGA_XY * v[None, :]
    return np.array([prod[2 * k : 2 * k + 2, 2 * k : 2 * k + 2].sum() for k in range(3)])


def _bound(u: np.ndarray, v: np.ndarray, single: str) -> float:
    c = _commutator_parts(u, v)
    k = MODES.index(single)
    return float(abs(c[k]) + abs(c.sum() - c[k]))


def vlf_witness(
    s6: SpectralDensity | np.ndarray,
    h: Sequence[float],
    g: Sequence[float],
    partition: str,
) -> tuple[float, float]:
    """van Loock-Furusawa variance sum and its separable bound.

    ``h`` and ``g`` define ``u`` and ``v``. Length-3 vectors are the pure
    forms ``u = sum h_k x_k``, ``v = sum g_k y_k`` over modes (p, s, i);
    length-6 vectors are general combinations in the per-mode basis
    ``(x_p, y_p, x_s, y_s, x_i, y_i)``.

    Returns ``(Var(u) + Var(v), bound)``.
    """
    single, _ = _parse_partition(partition)
    u, v = _as_vector(h, "x"), _as_vector(g, "y")
    if not np.any(u) or not np.any(v):
        raise ValueError("coefficient vectors must be non-zero")
    value = _variance_sum(_full_matrix(s6), u, v)
    return value, _bound(u, v, single)


def _variance_sum(m: np.ndarray, u: np.ndarray, v: np.ndarray) -> float:
    """``Var(u) + Var(v)`` evaluated in the declared (sum/difference) basis.

    The phase-difference variance can be orders of magnitude larger than the
    rest; mapping the observables instead of the matrix keeps it from
    leaking into the result through rounding.
    """
    a, b = MODE_TO_PM @ u, MODE_TO_PM @ v
    return float(a @ m @ a + b @ m @ b)


def _full_matrix(s6: SpectralDensity | np.ndarray) -> np.ndarray:
    m = s6.matrix if isinstance(s6, SpectralDensity) else np.asarray(s6, dtype=float)
    if m.shape != (6, 6):
        raise ValueError("a full 6x6 spectrum (pump included) is required")
    return m


def _declared_to_mode(vec: np.ndarray) -> np.ndarray:
    return MODE_TO_PM.T @ vec


@dataclass(frozen=True)
class VlfResult:
    partition: str
    u: np.ndarray
    v: np.ndarray
    value: float
    bound: float

    @property
    def witness(self) -> float:
        return self.value - self.bound

    @property
    def violated(self) -> bool:
        return self.witness < 0.0


def _schmidt_candidates(s6: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    """Observable pairs built from the Schmidt quadratures, in the mode basis."""
    st = schmidt_transform_4d(s6)
    xis = []
    for row in st.squeezed():
        full = np.zeros(6)
        full[_P_PLUS] = row
        xis.append(_declared_to_mode(full))
    rot = schmidt_rotation_2d(s6)
    x_minus = np.zeros(6)
    # x_-^rot = -sin(t) y_- + cos(t) x_-
    x_minus[QUADRATURES["y_-"]] = -math.sin(rot.theta_minus)
    x_minus[QUADRATURES["x_-"]] = math.cos(rot.theta_minus)
    x_minus = _declared_to_mode(x_minus)
    return [(xis[0], xis[1]), (x_minus, xis[0]), (x_minus, xis[1])]


def schmidt_seeded_witness(s6: SpectralDensity | np.ndarray, partition: str) -> VlfResult:
    """Best of the Schmidt-mode combinations ``(xi_a, xi_b)`` and ``(x_-^rot, xi_j)``."""
    single, _ = _parse_partition(partition)
    m = _full_matrix(s6)
    best = None
    for u, v in _schmidt_candidates(m):
        value = _variance_sum(m, u, v)
        r = VlfResult(f"{single}|{_rest(single)}", u, v, value, _bound(u, v, single))
        if best is None or r.witness < best.witness:
            best = r
    assert best is not None
    return best


def _rest(single: str) -> str:
    return {"p": "si", "s": "ip", "i": "sp"}[single]


def _permutation(single: str) -> np.ndarray:
    """Per-mode basis permutation putting the isolated mode first.

    The remaining two modes keep a fixed order so that the s|ip and i|sp
    problems are mirror images of each other.
    """
    order = {"p": ("p", "s", "i"), "s": ("s", "i", "p"), "i": ("i", "s", "p")}[single]
    idx = [2 * MODES.index(mode) + q for mode in order for q in (0, 1)]
    return np.eye(6)[idx]


def _objective(cov: np.ndarray, jmat: np.ndarray):
    def f(z: np.ndarray):
        p, q = z[:6], z[6:]
        np_, nq = np.linalg.norm(p), np.linalg.norm(q)
        u, v = p / np_, q / nq
        su, sv, jv, ju = cov @ u, cov @ v, jmat @ v, jmat.T @ u
        val = u @ su + v @ sv - u @ jv
        gu = 2.0 * su - jv
        gv = 2.0 * sv - ju
        gp = (gu - (u @ gu) * u) / np_
        gq = (gv - (v @ gv) * v) / nq
        return val, np.concatenate([gp, gq])

    return f


def _newton_polish(cov: np.ndarray, jmat: np.ndarray, z: np.ndarray, iters: int = 30) -> np.ndarray:
    """Refine a near-optimal ``(u, v)`` by Newton's method on the Lagrange conditions.

    Solves ``2 C u - J v = 2 l u``, ``2 C v - J^T u = 2 m v``, ``|u| = |v| = 1``.
    BFGS stalls when the phase-difference variance makes ``C`` badly
    conditioned; the quadratic convergence here does not.
    """
    u = z[:6] / np.linalg.norm(z[:6])
    v = z[6:] / np.linalg.norm(z[6:])

    def value(u, v):
        return u @ cov @ u + v @ cov @ v - u @ jmat @ v

    start = value(u, v)
    eye = np.eye(6)
    x = np.concatenate([u, v, [0.5 * u @ (2 * cov @ u - jmat @ v), 0.5 * v @ (2 * cov @ v - jmat.T @ u)]])
    for _ in range(iters):
        u, v, lam, mu = x[:6], x[6:12], x[12], x[13]
        res = np.concatenate(
            [
                2 * cov @ u - jmat @ v - 2 * lam * u,
                2 * cov @ v - jmat.T @ u - 2 * mu * v,
                [0.5 * (u @ u - 1.0), 0.5 * (v @ v - 1.0)],
            ]
        )
        jac = np.zeros((14, 14))
        jac[:6, :6] = 2 * cov - 2 * lam * eye
        jac[:6, 6:12] = -jmat
        jac[:6, 12] = -2 * u
        jac[6:12, :6] = -jmat.T
        jac[6:12, 6:12] = 2 * cov - 2 * mu * eye
        jac[6:12, 13] = -2 * v
        jac[12, :6] = u
        jac[13, 6:12] = v
        try:
            step = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError:
            break
        x = x + step
        if np.max(np.abs(step[:12])) < 1e-15:
            break
    u, v = x[:6] / np.linalg.norm(x[:6]), x[6:12] / np.linalg.norm(x[6:12])
    # Newton can wander to a different stationary point; keep it only if it helps
    if not np.all(np.isfinite(x)) or value(u, v) > start + 1e-14:
        return z
    return np.concatenate([u, v])


def vlf_optimize(
    s6: SpectralDensity | np.ndarray,
    partition: str,
    n_random: int = 4,
    seed: int = 0,
    polish: int = 3,
) -> VlfResult:
    """Minimize ``Var(u) + Var(v) - bound`` over unit-norm observables.

    The absolute values in the bound are split into sign patterns, each of
    which is a smooth quadratic objective on the product of two spheres.
    Starts: Schmidt-mode pairs, eigenvectors of the joint quadratic form,
    and a few seeded random directions. Every start gets a coarse BFGS
    pass; the best ``polish`` candidates are refined to tight tolerance and
    finished with Newton steps on the stationarity conditions.
    """
    single, _ = _parse_partition(partition)
    m = _full_matrix(s6)
    perm = _permutation(single)
    cov = perm @ to_mode_basis(m) @ perm.T
    cov = 0.5 * (cov + cov.T)
    omega_a = np.zeros((6, 6))
    omega_a[:2, :2] = _OMEGA_XY[:2, :2]
    omega_b = np.zeros((6, 6))
    omega_b[2:, 2:] = _OMEGA_XY[2:, 2:]

    seeds: list[tuple[np.ndarray, np.ndarray]] = []
    for u, v in _schmidt_candidates(m):
        seeds.append((perm @ u, perm @ v))
        seeds.append((perm @ v, perm @ u))
    rng = np.random.default_rng(seed)
    random_seeds = [(rng.standard_normal(6), rng.standard_normal(6)) for _ in range(n_random)]

    candidates: list[tuple[float, np.ndarray, np.ndarray]] = []
    for sign_b in (1.0, -1.0):
        jmat = omega_a + sign_b * omega_b
        h = np.block([[cov, -0.5 * jmat], [-0.5 * jmat.T, cov]])
        _, vecs = np.linalg.eigh(h)
        starts = list(seeds)
        for k in range(2):
            z = vecs[:, k]
            if np.linalg.norm(z[:6]) > 1e-8 and np.linalg.norm(z[6:]) > 1e-8:
                starts.append((z[:6], z[6:]))
        starts.extend(random_seeds)
        fun = _objective(cov, jmat)
        for u0, v0 in starts:
            if np.linalg.norm(u0) < 1e-12 or np.linalg.norm(v0) < 1e-12:
                continue
            z0 = np.concatenate([u0 / np.linalg.norm(u0), v0 / np.linalg.norm(v0)])
            res = minimize(fun, z0, jac=True, method="BFGS", options={"gtol": 1e-5, "maxiter": 500})
            candidates.append((float(res.fun), res.x, jmat))
    # coarse pass over every start, tight polish of the most promising few
    candidates.sort(key=lambda c: c[0])
    best_val, best_z = math.inf, None
    for _, z0, jmat in candidates[:polish]:
        res = minimize(_objective(cov, jmat), z0, jac=True, method="BFGS", options={"gtol": 1e-12, "maxiter": 2000})
        z = _newton_polish(cov, jmat, res.x)
        val = float(_objective(cov, jmat)(z)[0])
        if val < best_val - 1e-15:
            best_val, best_z = val, z
    assert best_z is not None
    u = perm.T @ (best_z[:6] / np.linalg.norm(best_z[:6]))
    v = perm.T @ (best_z[6:] / np.linalg.norm(best_z[6:]))
    value = _variance_sum(m, u, v)
    result = VlfResult(f"{single}|{_rest(single)}", u, v, value, _bound(u, v, single))
    seeded = schmidt_seeded_witness(m, partition)
    # the optimizer can only improve on its own starting points
    return result if result.witness <= seeded.witness else seeded


_SWAP_SI = np.eye(6)[[0, 1, 4, 5, 2, 3]]


def partition_symmetry_check(s6: SpectralDensity | np.ndarray, tol: float = 1e-9) -> bool:
    """True iff the s|ip and i|sp witnesses coincide under signal-idler exchange.

    Each partition's optimum is re-evaluated on the other partition with the
    signal and idler coefficients exchanged; both must agree within ``tol``,
    and so must the two optimal values.
    """
    m = _full_matrix(s6)
    rs = vlf_optimize(m, "s|ip")
    ri = vlf_optimize(m, "i|sp")
    checks = []
    for r, other in ((rs, "i|sp"), (ri, "s|ip")):
        val, bnd = vlf_witness(m, _SWAP_SI @ r.u, _SWAP_SI @ r.v, other)
        checks.append(abs((val - bnd) - r.witness))
    checks.append(abs(rs.witness - ri.witness))
    return bool(max(checks) <= tol)


@dataclass(frozen=True)
class WitnessReport:
    duan: float
    duan_rotated: float
    C: float
    rotation: SchmidtRotation2D
    vlf: dict[str, tuple[float, float]] = field(default_factory=dict)

    @property
    def violated(self) -> dict[str, bool]:
        out = {"duan": self.duan < 0.0, "duan_rotated": self.duan_rotated < 0.0}
        for k, (value, bound) in self.vlf.items():
            out[k] = value - bound < 0.0
        return out


def witness_report(s4: SpectralDensity, s6: SpectralDensity | None = None, optimize: bool = True) -> WitnessReport:
    """Evaluate every witness available for the given spectra."""
    rot = schmidt_rotation_2d(s4)
    dr, c = duan_rotated(s4, rot)
    vlf: dict[str, tuple[float, float]] = {}
    if s6 is not None:
        for part in PARTITIONS:
            r = vlf_optimize(s6, part) if optimize else schmidt_seeded_witness(s6, part)
            vlf[part] = (r.value, r.bound)
    return WitnessReport(duan_witness(s4), dr, c, rot, vlf)
