import numpy as np
import pytest
from hypothesis import HealthCheck, settings

# Solver-backed properties can take more than hypothesis' default deadline on
# a loaded box; correctness here is not timing-sensitive.
settings.register_profile(
    "suite",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
