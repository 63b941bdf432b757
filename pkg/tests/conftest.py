import math

import numpy as np
import pytest

from xpcomm.field import DEFAULT_GRID, DEFAULT_PARAMS, gaussian_input
from xpcomm.interferometer import default_spec, run_arms


@pytest.fixture(scope="session")
def params():
    return DEFAULT_PARAMS


@pytest.fixture(scope="session")
def grid():
    return DEFAULT_GRID


@pytest.fixture(scope="session")
def psi(grid, params):
    return gaussian_input(grid, params.w)


@pytest.fixture(scope="session")
def spec(params):
    return default_spec(params, phase=math.pi)


@pytest.fixture(scope="session")
def arms(psi, spec):
    """``(U_lower psi, U_upper psi)`` for the default parameters."""
    return run_arms(psi, spec)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
