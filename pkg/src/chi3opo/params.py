"""Parameter types and the laboratory <-> dimensionless normalization.

All rates are angular (rad/s). Inside the library every quantity is
dimensionless: rates in units of the common cavity linewidth Gamma, time in
units of 1/Gamma, field amplitudes in units of sqrt(Gamma/eta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from scipy.constants import c as SPEED_OF_LIGHT
from scipy.constants import hbar as HBAR

__all__ = [
    "InvalidParameterError",
    "PhysicalParams",
    "NormalizedParams",
    "ComplexAmplitude",
    "QuadratureConvention",
    "QUADRATURES",
    "canonical_phase",
    "normalize",
    "denormalize",
]

_REL_TOL = 1e-12


class InvalidParameterError(ValueError):
    """Raised when a parameter set violates its physical invariants."""


def canonical_phase(theta: float) -> float:
    """Map an angle onto the half-open interval (-pi, pi]."""
    t = math.remainder(float(theta), 2.0 * math.pi)
    if t <= -math.pi:
        t += 2.0 * math.pi
    return t


@dataclass(frozen=True)
class PhysicalParams:
    """Laboratory description of the three-mode resonator.

    Equal losses are assumed for pump, signal and idler, so a single
    linewidth ``cavity_linewidth = coupling_rate + loss_rate`` describes
    all three modes.
    """

    pump_wavelength: float
    intrinsic_Q: float
    loaded_Q: float
    cavity_linewidth: float
    coupling_rate: float
    loss_rate: float
    nonlinearity: float
    input_power: float = 0.0
    pump_detuning: float = 0.0
    dispersion: float = 0.0
    analysis_frequency: float = 0.0

    def __post_init__(self) -> None:
        positive = {
            "pump_wavelength": self.pump_wavelength,
            "intrinsic_Q": self.intrinsic_Q,
            "loaded_Q": self.loaded_Q,
            "cavity_linewidth": self.cavity_linewidth,
            "coupling_rate": self.coupling_rate,
            "loss_rate": self.loss_rate,
            "nonlinearity": self.nonlinearity,
        }
        for name, value in positive.items():
            if not (math.isfinite(value) and value > 0.0):
                raise InvalidParameterError(f"{name} must be positive, got {value!r}")
        if not (math.isfinite(self.input_power) and self.input_power >= 0.0):
            raise InvalidParameterError(f"input_power must be non-negative, got {self.input_power!r}")
        if self.analysis_frequency < 0.0:
            raise InvalidParameterError("analysis_frequency must be non-negative")
        total = self.coupling_rate + self.loss_rate
        if not math.isclose(total, self.cavity_linewidth, rel_tol=_REL_TOL, abs_tol=0.0):
            raise InvalidParameterError(
                f"cavity_linewidth ({self.cavity_linewidth!r}) must equal "
                f"coupling_rate + loss_rate ({total!r})"
            )

    @property
    def pump_angular_frequency(self) -> float:
        return 2.0 * math.pi * SPEED_OF_LIGHT / self.pump_wavelength


@dataclass(frozen=True)
class NormalizedParams:
    """Dimensionless model parameters.

    Attributes
    ----------
    F2 : normalized input pump power.
    delta_p : pump detuning in units of the linewidth.
    d3 : dispersion ``2 w_p - w_s - w_i`` in units of the linewidth.
    omega : analysis (sideband) frequency in units of the linewidth.
    gamma_ratio : output coupling over total loss, in (0, 1].
    """

    F2: float = 0.0
    delta_p: float = 0.0
    d3: float = 0.0
    omega: float = 0.015
    gamma_ratio: float = 0.55

    def __post_init__(self) -> None:
        for name in ("F2", "delta_p", "d3", "omega", "gamma_ratio"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise InvalidParameterError(f"{name} must be finite, got {value!r}")
        if self.F2 < 0.0:
            raise InvalidParameterError(f"F2 must be non-negative, got {self.F2!r}")
        if not 0.0 < self.gamma_ratio <= 1.0:
            raise InvalidParameterError(f"gamma_ratio must lie in (0, 1], got {self.gamma_ratio!r}")

    @property
    def drive(self) -> float:
        """Real, non-negative pump drive amplitude F."""
        return math.sqrt(self.F2)

    @property
    def delta_si(self) -> float:
        """Signal/idler detuning.

        Energy conservation of the carriers gives ``Delta_s + Delta_i =
        2 Delta_p - D3``; the symmetric split is the one compatible with
        equal signal and idler amplitudes.
        """
        return self.delta_p - 0.5 * self.d3

    def with_(self, **changes: float) -> "NormalizedParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class ComplexAmplitude:
    """Mean field ``A exp(i theta)`` with ``A >= 0`` and theta in (-pi, pi]."""

    modulus: float
    phase: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.modulus) and self.modulus >= 0.0):
            raise InvalidParameterError(f"modulus must be non-negative, got {self.modulus!r}")
        object.__setattr__(self, "phase", canonical_phase(self.phase))

    @classmethod
    def from_complex(cls, z: complex) -> "ComplexAmplitude":
        return cls(abs(z), math.atan2(z.imag, z.real) if z != 0 else 0.0)

    @property
    def value(self) -> complex:
        return self.modulus * complex(math.cos(self.phase), math.sin(self.phase))

    @property
    def intensity(self) -> float:
        return self.modulus * self.modulus


@dataclass(frozen=True)
class QuadratureConvention:
    """Index map of the quadrature vector used by every 6x6 matrix.

    ``x = (a + a^dag)/sqrt(2)``, ``y = -i (a - a^dag)/sqrt(2)`` so
    ``[x, y] = i`` and each vacuum quadrature has variance 1/2. Sum and
    difference quadratures are ``(q_s +- q_i)/sqrt(2)``.
    """

    ordering: tuple[str, ...] = ("y_p", "x_p", "y_+", "x_+", "y_-", "x_-")
    vacuum_variance: float = 0.5
    index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "index", {name: k for k, name in enumerate(self.ordering)})

    def __getitem__(self, name: str) -> int:
        return self.index[name]


QUADRATURES = QuadratureConvention()


def normalize(p: PhysicalParams) -> NormalizedParams:
    """Convert laboratory parameters to the dimensionless model parameters."""
    g = p.cavity_linewidth
    if g <= 0.0 or p.nonlinearity <= 0.0:
        raise InvalidParameterError("linewidth and nonlinearity must be positive")
    f2 = 2.0 * p.coupling_rate * p.nonlinearity * p.input_power / (HBAR * p.pump_angular_frequency * g**3)
    return NormalizedParams(
        F2=f2,
        delta_p=p.pump_detuning / g,
        d3=p.dispersion / g,
        omega=p.analysis_frequency / g,
        gamma_ratio=p.coupling_rate / g,
    )


def denormalize(n: NormalizedParams, reference: PhysicalParams) -> PhysicalParams:
    """Inverse of :func:`normalize`.

    The linewidth, nonlinearity and wavelength come from ``reference``; the
    coupling/loss split is rebuilt from ``n.gamma_ratio``.
    """
    g = reference.cavity_linewidth
    eta = reference.nonlinearity
    if g <= 0.0 or eta <= 0.0:
        raise InvalidParameterError("linewidth and nonlinearity must be positive")
    gamma = n.gamma_ratio * g
    mu = g - gamma
    if mu <= 0.0:
        # gamma_ratio == 1 leaves no intrinsic loss, which PhysicalParams forbids
        raise InvalidParameterError("gamma_ratio = 1 has no physical counterpart with positive loss")
    p_in = n.F2 * HBAR * reference.pump_angular_frequency * g**3 / (2.0 * gamma * eta)
    return replace(
        reference,
        cavity_linewidth=gamma + mu,
        coupling_rate=gamma,
        loss_rate=mu,
        input_power=p_in,
        pump_detuning=n.delta_p * g,
        dispersion=n.d3 * g,
        analysis_frequency=n.omega * g,
    )
