"""Quantum noise and multipartite entanglement in a chi(3) optical parametric oscillator."""

from __future__ import annotations

__version__ = "0.1.0"

from .entanglement import (
    PARTITIONS,
    SchmidtRotation2D,
    SchmidtTransform4D,
    VlfResult,
    WitnessReport,
    duan_rotated,
    duan_witness,
    schmidt_rotation_2d,
    schmidt_seeded_witness,
    schmidt_transform_4d,
    vlf_optimize,
    vlf_witness,
    witness_report,
)
from .fluctuations import (
    FluctuationSystem,
    SpectralDensity,
    UnstableStateError,
    linearize,
    numerical_drift,
    output_spectrum,
    pump_classical_spectrum,
    stability,
)
from .params import (
    QUADRATURES,
    ComplexAmplitude,
    InvalidParameterError,
    NormalizedParams,
    PhysicalParams,
    denormalize,
    normalize,
)
from .sde import SdeRun, simulate_linear
from .steady import (
    SteadyState,
    SweepResult,
    classical_rhs,
    solve_all,
    solve_oscillating,
    solve_pump_only,
    sweep_power,
)
