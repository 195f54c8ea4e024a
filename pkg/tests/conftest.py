import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "herzlab",
    max_examples=50,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("herzlab")


@pytest.fixture
def rng():
    return np.random.default_rng(0xC0FFEE)
