"""Shared fixtures: baseline problem data and the expensive dense eigensolves.

Baseline everywhere: zeta = 1, f = 2, grid n = 512, half_length = 20
(resolvent work at n = 256 per the grid defaults).
"""

import numpy as np
import pytest

from llewave import (
    Grid,
    Params,
    assemble,
    dense_spectrum,
    leading_ansatz,
    newton_correct,
    solve_theta0,
    spectral_projection,
    to_real_form,
)

BASE_N = 512
BASE_HALF_LENGTH = 20.0


@pytest.fixture(scope="session")
def grid():
    return Grid(BASE_N, BASE_HALF_LENGTH)


@pytest.fixture(scope="session")
def grid_fine():
    return Grid(2 * BASE_N, BASE_HALF_LENGTH)


@pytest.fixture(scope="session")
def grid_resolvent():
    return Grid(256, BASE_HALF_LENGTH)


@pytest.fixture(scope="session")
def params():
    return Params(1.0, 2.0)


@pytest.fixture(scope="session")
def angles(params):
    return solve_theta0(params)


def _solve(params, grid, theta, eps):
    p = params.with_epsilon(eps)
    return newton_correct(leading_ansatz(p, grid, theta), p)


@pytest.fixture(scope="session")
def stable_point(params, grid, angles):
    """Converged stable-angle wave at the baseline eps = 0.01."""
    return _solve(params, grid, angles.theta_stable, 0.01)


@pytest.fixture(scope="session")
def stable_point_half(params, grid, angles):
    return _solve(params, grid, angles.theta_stable, 0.005)


@pytest.fixture(scope="session")
def unstable_point(params, grid, angles):
    return _solve(params, grid, angles.theta_unstable, 0.01)


@pytest.fixture(scope="session")
def stable_ops(stable_point):
    return assemble(stable_point)


@pytest.fixture(scope="session")
def stable_report(stable_ops):
    return dense_spectrum(stable_ops)


@pytest.fixture(scope="session")
def stable_report_half(stable_point_half):
    return dense_spectrum(assemble(stable_point_half))


@pytest.fixture(scope="session")
def unstable_ops(unstable_point):
    return assemble(unstable_point)


@pytest.fixture(scope="session")
def unstable_report(unstable_ops):
    return dense_spectrum(unstable_ops)


@pytest.fixture(scope="session")
def stable_real_ops(stable_ops, angles):
    return to_real_form(stable_ops, angles.theta_stable)


@pytest.fixture(scope="session")
def resolvent_point(params, grid_resolvent, angles):
    """Stable wave on the coarser resolvent grid."""
    return _solve(params, grid_resolvent, angles.theta_stable, 0.01)


@pytest.fixture(scope="session")
def resolvent_ops(resolvent_point):
    return assemble(resolvent_point)


@pytest.fixture(scope="session")
def resolvent_proj(resolvent_ops):
    return spectral_projection(resolvent_ops)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
