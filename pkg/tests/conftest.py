from __future__ import annotations

import numpy as np
import pytest

from chi3opo import NormalizedParams, linearize, solve_all, solve_oscillating


def random_stable_states(n, seed=0, oscillating_only=False):
    """Stable steady states drawn from a broad parameter box."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        p = NormalizedParams(
            F2=float(rng.uniform(0.5, 100.0)),
            delta_p=float(rng.uniform(-2.0, 3.0)),
            d3=float(rng.uniform(-10.0, 1.0)),
        )
        for s in solve_all(p):
            if s.stable and (not oscillating_only or s.branch_kind == "oscillating"):
                out.append(s)
                break
    return out


@pytest.fixture(scope="session")
def osc_state():
    """Stable oscillating state inside the d3 = -8 tongue."""
    (s,) = solve_oscillating(NormalizedParams(F2=40.0, d3=-8.0))
    assert s.stable
    return s


@pytest.fixture(scope="session")
def osc_system(osc_state):
    return linearize(osc_state)


@pytest.fixture(scope="session")
def vacuum_system():
    (s,) = solve_all(NormalizedParams())
    return linearize(s)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        status, text = RESULTS[number]
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {text}")
