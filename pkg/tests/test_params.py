from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chi3opo.params import (
    QUADRATURES,
    ComplexAmplitude,
    InvalidParameterError,
    NormalizedParams,
    PhysicalParams,
    canonical_phase,
    denormalize,
    normalize,
)
from oracles import C_LIGHT, HBAR

LAMBDA = 1.55e-6
GAMMA_TOT = 2 * math.pi * 100e6
ETA = 2.0


def device(P_in=0.0, **kw):
    gamma = 0.55 * GAMMA_TOT
    base = dict(
        pump_wavelength=LAMBDA,
        intrinsic_Q=1e6,
        loaded_Q=5e5,
        cavity_linewidth=GAMMA_TOT,
        coupling_rate=gamma,
        loss_rate=GAMMA_TOT - gamma,
        nonlinearity=ETA,
        input_power=P_in,
    )
    base.update(kw)
    return PhysicalParams(**base)


def power_for_F2(F2):
    # hand inversion of F2 = 2 gamma eta P / (hbar Omega Gamma^3)
    omega_p = 2 * math.pi * C_LIGHT / LAMBDA
    return F2 * HBAR * omega_p * GAMMA_TOT**3 / (2 * 0.55 * GAMMA_TOT * ETA)


def test_zero_input_gives_zero_power():
    assert normalize(device()).F2 == 0.0


def test_typical_rates_normalize():
    n = normalize(device(analysis_frequency=1.5e-2 * GAMMA_TOT))
    assert n.omega == pytest.approx(0.015, rel=1e-12)
    assert n.gamma_ratio == pytest.approx(0.55, rel=1e-12)


def test_f2_matches_hand_computation():
    n = normalize(device(P_in=power_for_F2(4.0)))
    assert n.F2 == pytest.approx(4.0, rel=1e-12)


def test_detuning_and_dispersion_scale_by_linewidth():
    n = normalize(device(pump_detuning=-3.0 * GAMMA_TOT, dispersion=7.5 * GAMMA_TOT))
    assert n.delta_p == pytest.approx(-3.0, rel=1e-12)
    assert n.d3 == pytest.approx(7.5, rel=1e-12)


def test_denormalize_recovers_power():
    p = device()
    back = denormalize(NormalizedParams(F2=4.0), p)
    assert back.input_power == pytest.approx(power_for_F2(4.0), rel=1e-12)
    assert denormalize(NormalizedParams(F2=0.0), p).input_power == 0.0


@settings(max_examples=60, deadline=None)
@given(
    P=st.one_of(st.just(0.0), st.floats(1e-9, 10.0)),
    dp=st.floats(-20.0, 20.0),
    d3=st.floats(-20.0, 20.0),
    w=st.floats(0.0, 5.0),
)
def test_round_trip(P, dp, d3, w):
    p = device(P_in=P, pump_detuning=dp * GAMMA_TOT, dispersion=d3 * GAMMA_TOT, analysis_frequency=w * GAMMA_TOT)
    q = denormalize(normalize(p), p)
    for name in ("input_power", "pump_detuning", "dispersion", "analysis_frequency"):
        assert getattr(q, name) == pytest.approx(getattr(p, name), rel=1e-12, abs=1e-300)
    n = normalize(p)
    m = normalize(denormalize(n, p))
    for name in ("F2", "delta_p", "d3", "omega", "gamma_ratio"):
        assert getattr(m, name) == pytest.approx(getattr(n, name), rel=1e-12, abs=1e-300)


@given(P=st.floats(1e-9, 1e3))
def test_power_homogeneity(P):
    assert normalize(device(P_in=2 * P)).F2 == 2 * normalize(device(P_in=P)).F2


@pytest.mark.parametrize(
    "kw",
    [
        dict(nonlinearity=0.0),
        dict(cavity_linewidth=0.0, coupling_rate=0.0, loss_rate=0.0),
        dict(loss_rate=1.0),  # breaks Gamma = gamma + mu
        dict(input_power=-1.0),
        dict(pump_wavelength=-1.0),
    ],
)
def test_invalid_physical(kw):
    with pytest.raises(InvalidParameterError):
        device(**kw)


@pytest.mark.parametrize("kw", [dict(F2=-1.0), dict(gamma_ratio=0.0), dict(gamma_ratio=1.5), dict(d3=math.nan)])
def test_invalid_normalized(kw):
    with pytest.raises(InvalidParameterError):
        NormalizedParams(**kw)


def test_signal_detuning_split():
    n = NormalizedParams(delta_p=1.0, d3=-8.0)
    assert n.delta_si == 5.0
    assert n.with_(F2=3.0).F2 == 3.0


@given(st.floats(-100.0, 100.0))
def test_canonical_phase_range(theta):
    t = canonical_phase(theta)
    assert -math.pi < t <= math.pi
    assert np.exp(1j * t) == pytest.approx(np.exp(1j * theta), abs=1e-9)


def test_phase_boundary():
    assert canonical_phase(-math.pi) == math.pi
    assert ComplexAmplitude(1.0, 3 * math.pi).phase == pytest.approx(math.pi)


def test_complex_amplitude():
    z = 0.3 - 0.4j
    a = ComplexAmplitude.from_complex(z)
    assert a.modulus == pytest.approx(0.5)
    assert a.value == pytest.approx(z)
    assert a.intensity == pytest.approx(0.25)
    with pytest.raises(InvalidParameterError):
        ComplexAmplitude(-1.0, 0.0)


def test_quadrature_convention():
    assert QUADRATURES.ordering == ("y_p", "x_p", "y_+", "x_+", "y_-", "x_-")
    assert QUADRATURES.vacuum_variance == 0.5
    assert QUADRATURES["x_-"] == 5
