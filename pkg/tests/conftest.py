"""Shared fixtures: the optimizer runs are the expensive part of the suite,
so each (operating point, seed family) combination runs once per session and
is reused by the optimizer tests and the acceptance gate."""
import pytest

from eitmemory import (MediumParams, iterate_optimal, seed_waveform,
                       square_pulse)

# the two storage operating points exercised throughout: a strong-coupling
# medium with moderate dephasing, and a weaker coupling with low dephasing
POINT_A = {"od": 60.0, "omega_c": 11.0, "gamma12": 0.03}
POINT_B = {"od": 60.0, "omega_c": 6.88, "gamma12": 0.01}


def _optimize(point: dict, seed_family: str):
    params = MediumParams(**point)
    psi0 = seed_waveform(params)
    if seed_family == "square":
        psi0 = square_pulse(psi0.grid, psi0.centroid(), psi0.fwhm())
    trace = iterate_optimal(psi0, params)
    return params, trace


@pytest.fixture(scope="session")
def optimum_a():
    return _optimize(POINT_A, "gaussian")


@pytest.fixture(scope="session")
def optimum_b():
    return _optimize(POINT_B, "gaussian")


@pytest.fixture(scope="session")
def optimum_a_square():
    return _optimize(POINT_A, "square")


@pytest.fixture(scope="session")
def optimum_b_square():
    return _optimize(POINT_B, "square")
