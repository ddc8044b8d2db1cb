import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rkcp.tableau import MethodSpec, build_csp
from rkcp.solver import SolveConfig, branch_and_prune

settings.register_profile(
    "default", deadline=None, max_examples=100, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # The first solve triggers numba compilation of the tape kernels.
    branch_and_prune(build_csp(MethodSpec(1, 1, explicit=True)), SolveConfig())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
