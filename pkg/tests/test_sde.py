from __future__ import annotations

import numpy as np
import pytest
from scipy.linalg import solve_continuous_lyapunov

from chi3opo import NormalizedParams, SdeRun, UnstableStateError, linearize, output_spectrum, solve_pump_only, simulate_linear
from chi3opo.sde import transition_matrices


def z_scores(run, exact):
    return (run.estimated_spectrum.matrix - exact) / run.standard_error


def test_vacuum_within_three_sigma(vacuum_system):
    run = simulate_linear(vacuum_system, SdeRun(seed=1, duration=1000.0, n_trajectories=400))
    assert np.max(np.abs(z_scores(run, 0.5 * np.eye(6)))) <= 3.0


def test_bit_identical_given_seed(vacuum_system):
    cfg = SdeRun(seed=42, duration=200.0, n_trajectories=60, batch_size=25)
    a = simulate_linear(vacuum_system, cfg)
    b = simulate_linear(vacuum_system, cfg)
    assert np.array_equal(a.estimated_spectrum.matrix, b.estimated_spectrum.matrix)
    assert np.array_equal(a.standard_error, b.standard_error)
    # parallel batches draw the same streams
    c = simulate_linear(vacuum_system, SdeRun(seed=42, duration=200.0, n_trajectories=60, batch_size=25, workers=3))
    assert np.array_equal(a.estimated_spectrum.matrix, c.estimated_spectrum.matrix)
    d = simulate_linear(vacuum_system, SdeRun(seed=43, duration=200.0, n_trajectories=60, batch_size=25))
    assert not np.array_equal(a.estimated_spectrum.matrix, d.estimated_spectrum.matrix)


def test_standard_error_shrinks_as_inverse_sqrt(vacuum_system):
    small = simulate_linear(vacuum_system, SdeRun(seed=5, duration=400.0, n_trajectories=400))
    large = simulate_linear(vacuum_system, SdeRun(seed=6, duration=400.0, n_trajectories=800))
    ratio = np.mean(np.diag(large.standard_error) / np.diag(small.standard_error))
    assert ratio == pytest.approx(1 / np.sqrt(2), rel=0.2)


def test_halves_agree(osc_system):
    run = simulate_linear(osc_system, SdeRun(seed=3, duration=6000.0, n_trajectories=300, n_segments=2))
    (a, b), (ea, eb) = run.segment_spectra, run.segment_errors
    assert np.all(np.abs(a - b) <= 3.0 * np.hypot(ea, eb))


def test_oscillating_state_matches_analytic(osc_system):
    run = simulate_linear(osc_system, SdeRun(seed=7, n_trajectories=500))
    exact = output_spectrum(osc_system, 0.015).matrix
    assert np.max(np.abs(z_scores(run, exact))) <= 3.0


def test_detuned_pump_only_state_euler():
    (s,) = solve_pump_only(NormalizedParams(F2=1.0, delta_p=0.5, d3=-1.0))
    fs = linearize(s)
    run = simulate_linear(fs, SdeRun(seed=2, method="euler", dt=0.01, duration=150.0, n_trajectories=250, omega=0.5))
    exact = output_spectrum(fs, 0.5).matrix
    assert np.max(np.abs(z_scores(run, exact))) <= 3.0


def test_transition_covariance_is_stationary(osc_system):
    # the state block of the one-step map must preserve the Lyapunov covariance
    fs = linearize(solve_pump_only(NormalizedParams(F2=2.0, delta_p=1.0))[0])
    a = fs.drift
    q = 0.5 * (fs.input_coupling @ fs.input_coupling.T + fs.loss_coupling @ fs.loss_coupling.T)
    sigma = solve_continuous_lyapunov(a, -q)
    phi, chol = transition_matrices(a, fs.input_coupling, fs.loss_coupling, 0.3)
    p = phi[:6, :6]
    c = (chol @ chol.T)[:6, :6]
    assert np.allclose(p @ sigma @ p.T + c, sigma, atol=1e-12)


def test_metadata_records_window_and_rule(vacuum_system):
    run = simulate_linear(vacuum_system, SdeRun(duration=100.0, n_trajectories=10))
    assert run.metadata["window"] == "hann"
    assert "spawn_key" in run.metadata["seed_rule"]
    assert run.metadata["transient_time"] >= 10.0


@pytest.mark.parametrize(
    "kw",
    [
        dict(seed=-1),
        dict(seed=2**64),
        dict(method="euler", dt=0.05),
        dict(n_trajectories=1),
        dict(dt=0.0),
        dict(method="milstein"),
    ],
)
def test_invalid_config(kw):
    with pytest.raises(ValueError):
        SdeRun(**kw)


def test_unstable_system_rejected():
    s = sorted(solve_pump_only(NormalizedParams(F2=4.0, delta_p=3.0)), key=lambda t: t.pump_intensity)[1]
    with pytest.raises(UnstableStateError):
        simulate_linear(linearize(s), SdeRun(duration=10.0, n_trajectories=2))
