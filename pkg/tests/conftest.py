import pytest

from components.heat_kernels import ModelParams, estimate_bound_constant
from components.spectral_core import GridSpec


@pytest.fixture
def grid():
    """Default 1-D box: R = 40, n = 1024."""
    return GridSpec(1)


@pytest.fixture
def coarse_grid():
    """Small box for runs whose data only excite the zero mode."""
    return GridSpec(1, 40.0, 64)


@pytest.fixture
def half():
    return ModelParams(1, 0.5)


@pytest.fixture(scope="session")
def bound_constant():
    """Empirical kernel bound constant for N = 1, s = 1/2."""
    return estimate_bound_constant(ModelParams(1, 0.5), grid=GridSpec(1, 20.0, 2048))
