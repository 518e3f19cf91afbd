"""Linearized quantum fluctuations and output noise spectra.

Convention used throughout: ``dX/dtau = drift @ X + T_in @ X_in + T_loss @ X_loss``
with ``X`` the quadrature vector in the order of
:data:`chi3opo.params.QUADRATURES` (``y_p, x_p, y_+, x_+, y_-, x_-``).
Each mode's fluctuation is measured in the frame of its mean-field phase,
``delta a_j exp(-i theta_j)``, so ``x_j`` is the amplitude quadrature.

Noise inputs are white vacuum fields with symmetrized quadrature spectral
density 1/2; the reflected field obeys ``a_out = -a_in + sqrt(2 gamma) a``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import QUADRATURES
from .steady import RESIDUAL_TOL, SteadyState

__all__ = [
    "FluctuationSystem",
    "SpectralDensity",
    "UnstableStateError",
    "MODE_TO_PM",
    "symplectic_form",
    "mode_jacobian",
    "linearize",
    "numerical_drift",
    "stability",
    "output_spectrum",
    "pump_classical_spectrum",
    "to_mode_basis",
]

STABILITY_MARGIN = 1e-9
PHYSICALITY_TOL = 1e-9

_S = 1.0 / np.sqrt(2.0)

# rows: (y_p, x_p, y_+, x_+, y_-, x_-); columns: (x_p, y_p, x_s, y_s, x_i, y_i)
MODE_TO_PM = np.array(
    [
        [0, 1, 0, 0, 0, 0],
        [1, 0, 0, 0, 0, 0],
        [0, 0, 0, _S, 0, _S],
        [0, 0, _S, 0, _S, 0],
        [0, 0, 0, _S, 0, -_S],
        [0, 0, _S, 0, -_S, 0],
    ]
)

PUMP = slice(0, 2)
SIGNAL_IDLER = slice(2, 6)
DIFFERENCE = slice(4, 6)


class UnstableStateError(ValueError):
    """No stationary spectrum exists for a state with a growing mode."""


def symplectic_form(n_modes: int, order: str = "yx") -> np.ndarray:
    """Commutator matrix ``[X_j, X_k] = i Omega_jk``.

    ``order="yx"`` for ``(y, x)`` pairs as in the declared ordering,
    ``"xy"`` for the per-mode ``(x, y)`` basis.
    """
    block = np.array([[0.0, 1.0], [-1.0, 0.0]])
    if order == "yx":
        block = -block
    return np.kron(np.eye(n_modes), block)


def to_mode_basis(matrix: np.ndarray) -> np.ndarray:
    """Re-express a 6x6 matrix from the declared ordering in (x_p, y_p, x_s, y_s, x_i, y_i)."""
    return MODE_TO_PM.T @ matrix @ MODE_TO_PM


@dataclass(frozen=True)
class FluctuationSystem:
    drift: np.ndarray
    input_coupling: np.ndarray
    loss_coupling: np.ndarray
    base: SteadyState

    @property
    def has_phase_mode(self) -> bool:
        """True when the signal-idler phase difference is a free (neutral) direction."""
        return self.base.branch_kind == "oscillating"

    def reduced(self) -> "FluctuationSystem":
        """The four signal/idler quadratures with the pump held classical."""
        k = SIGNAL_IDLER
        return FluctuationSystem(
            self.drift[k, k].copy(), self.input_coupling[k, k].copy(), self.loss_coupling[k, k].copy(), self.base
        )


@dataclass(frozen=True)
class SpectralDensity:
    """Symmetrized output quadrature spectral matrix at one sideband frequency."""

    omega: float
    matrix: np.ndarray
    labels: tuple[str, ...] = QUADRATURES.ordering

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=float)
        object.__setattr__(self, "matrix", m)

    def __getitem__(self, label: str) -> float:
        k = self.labels.index(label)
        return float(self.matrix[k, k])

    def covariance(self, a: str, b: str) -> float:
        return float(self.matrix[self.labels.index(a), self.labels.index(b)])

    def physicality_margin(self) -> float:
        """Smallest eigenvalue of ``S + (i/2) Omega``; negative means unphysical."""
        omega = symplectic_form(len(self.labels) // 2, "yx")
        return float(np.min(np.linalg.eigvalsh(self.matrix + 0.5j * omega)))

    def is_physical(self, tol: float = PHYSICALITY_TOL) -> bool:
        return self.physicality_margin() >= -tol


def mode_jacobian(state: SteadyState) -> tuple[np.ndarray, np.ndarray]:
    """Holomorphic and anti-holomorphic derivatives of the mean-field equations.

    Returns ``(J, K)`` with ``d(delta a) = J delta a + K delta a*`` for the
    mode order (p, s, i).
    """
    n = state.params
    ap, as_, ai = state.alpha
    c = np.conjugate
    sp, ss, si = abs(ap) ** 2, abs(as_) ** 2, abs(ai) ** 2
    ds = n.delta_si
    J = np.array(
        [
            [
                -(1 + 1j * n.delta_p) + 2j * (sp + ss + si),
                2j * (c(as_) * ap + c(ap) * ai),
                2j * (c(ai) * ap + c(ap) * as_),
            ],
            [
                2j * (c(ap) * as_ + ap * c(ai)),
                -(1 + 1j * ds) + 2j * (sp + ss + si),
                2j * c(ai) * as_,
            ],
            [
                2j * (c(ap) * ai + ap * c(as_)),
                2j * c(as_) * ai,
                -(1 + 1j * ds) + 2j * (sp + ss + si),
            ],
        ]
    )
    K = np.array(
        [
            [1j * (ap * ap + 2 * as_ * ai), 2j * as_ * ap, 2j * ai * ap],
            [2j * ap * as_, 1j * as_ * as_, 1j * (2 * ai * as_ + ap * ap)],
            [2j * ap * ai, 1j * (2 * as_ * ai + ap * ap), 1j * ai * ai],
        ]
    )
    return J, K


def _quadrature_drift(state: SteadyState) -> np.ndarray:
    """Drift in the per-mode rotated basis (x_p, y_p, x_s, y_s, x_i, y_i)."""
    J, K = mode_jacobian(state)
    th = state.phases
    Jr = np.exp(-1j * (th[:, None] - th[None, :])) * J
    Kr = np.exp(-1j * (th[:, None] + th[None, :])) * K
    plus, minus = Jr + Kr, Jr - Kr
    out = np.empty((6, 6))
    out[0::2, 0::2] = plus.real
    out[0::2, 1::2] = -minus.imag
    out[1::2, 0::2] = plus.imag
    out[1::2, 1::2] = minus.real
    return out


def linearize(state: SteadyState) -> FluctuationSystem:
    """Linear Langevin system for the fluctuations around ``state``."""
    if state.residual() > RESIDUAL_TOL:
        raise ValueError(f"not a steady state: residual {state.residual():.3e} exceeds {RESIDUAL_TOL:g}")
    drift = MODE_TO_PM @ _quadrature_drift(state) @ MODE_TO_PM.T
    g = state.params.gamma_ratio
    eye = np.eye(6)
    return FluctuationSystem(drift, np.sqrt(2.0 * g) * eye, np.sqrt(2.0 * (1.0 - g)) * eye, state)


def numerical_drift(state: SteadyState, step: float = 1e-6) -> np.ndarray:
    """Central finite-difference drift built from the mean-field equations alone.

    Each mode is displaced along its own rotated amplitude and phase
    directions; the response is projected back onto the same directions.
    """
    from .steady import classical_rhs

    n = state.params
    alpha = state.alpha
    rot = np.exp(1j * state.phases)
    jac = np.empty((6, 6))
    for col in range(6):
        mode, quad = divmod(col, 2)
        kick = np.zeros(3, dtype=complex)
        kick[mode] = rot[mode] * (1.0 if quad == 0 else 1j) * step / np.sqrt(2.0)
        diff = (classical_rhs(alpha + kick, n) - classical_rhs(alpha - kick, n)) / (2.0 * step)
        back = np.sqrt(2.0) * diff / rot
        jac[0::2, col] = back.real
        jac[1::2, col] = back.imag
    return MODE_TO_PM @ jac @ MODE_TO_PM.T


def _relevant_eigenvalues(fs: FluctuationSystem) -> np.ndarray:
    drift = fs.drift
    if fs.has_phase_mode:
        # the y_- column vanishes identically (phase-difference invariance),
        # so its zero eigenvalue factors out exactly
        k = QUADRATURES["y_-"] - (6 - drift.shape[0])
        keep = [j for j in range(drift.shape[0]) if j != k]
        drift = drift[np.ix_(keep, keep)]
    return np.linalg.eigvals(drift)


def stability(fs: FluctuationSystem) -> tuple[bool, np.ndarray]:
    """Linear stability of the underlying steady state.

    Stable iff every eigenvalue of the drift has real part below ``-1e-9``.
    For oscillating states the neutral phase-difference eigenvalue (exactly
    zero) is excluded; it produces phase diffusion, not instability.

    Returns the flag and all drift eigenvalues (sorted by real part,
    descending).
    """
    eigs = np.linalg.eigvals(fs.drift)
    eigs = eigs[np.argsort(-eigs.real, kind="stable")]
    relevant = _relevant_eigenvalues(fs)
    return bool(np.max(relevant.real) < -STABILITY_MARGIN), eigs


def _spectrum(drift, t_in, t_loss, omega):
    dim = drift.shape[0]
    g = np.linalg.solve(-1j * omega * np.eye(dim) - drift, np.eye(dim))
    k_in = t_in
    tr_in = -np.eye(dim) + k_in @ g @ t_in
    tr_loss = k_in @ g @ t_loss
    h = 0.5 * (tr_in @ tr_in.conj().T + tr_loss @ tr_loss.conj().T)
    s = h.real
    return 0.5 * (s + s.T)


def _check_spectrum_ok(fs: FluctuationSystem, omega: float) -> None:
    stable = np.max(_relevant_eigenvalues(fs).real) < -STABILITY_MARGIN
    if not stable:
        raise UnstableStateError("state is linearly unstable; no stationary spectrum")
    if fs.has_phase_mode and omega == 0.0:
        raise UnstableStateError("phase-difference diffusion makes the spectrum diverge at omega = 0")


def output_spectrum(fs: FluctuationSystem, omega: float) -> SpectralDensity:
    """Symmetrized output spectral matrix of all six quadratures at ``omega``."""
    _check_spectrum_ok(fs, omega)
    return SpectralDensity(float(omega), _spectrum(fs.drift, fs.input_coupling, fs.loss_coupling, omega))


def pump_classical_spectrum(fs: FluctuationSystem, omega: float) -> SpectralDensity:
    """Spectrum of ``(y_+, x_+, y_-, x_-)`` with pump fluctuations switched off."""
    red = fs.reduced()
    _check_spectrum_ok(red, omega)
    m = _spectrum(red.drift, red.input_coupling, red.loss_coupling, omega)
    return SpectralDensity(float(omega), m, QUADRATURES.ordering[2:])
