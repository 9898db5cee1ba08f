import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from bie2d import testcases
from bie2d.studies import solve_uniform

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def concentric_config():
    return testcases.concentric()


@pytest.fixture(scope="session")
def concentric_solution(concentric_config):
    tree = concentric_config.build_tree()
    return solve_uniform(tree, concentric_config.boundary_functions(), 256)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
