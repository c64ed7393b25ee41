import numpy as np
import pytest
from hypothesis import HealthCheck, settings


settings.register_profile("default", max_examples=50, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("fast", max_examples=5, deadline=None)
settings.load_profile("default")

@pytest.fixture
def rng():
    return np.random.default_rng(20221016)
