import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_zeros(rng, count, max_radius, min_sep, min_radius=0.0):
    zeros = []
    while len(zeros) < count:
        a = rng.uniform(min_radius, max_radius) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        if all(abs(a - b) >= min_sep for b in zeros):
            zeros.append(complex(a))
    return np.array(zeros)
