import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=25, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_state(rng, n, real=False):
    v = rng.normal(size=1 << n) + (0 if real else 1j * rng.normal(size=1 << n))
    return v / np.linalg.norm(v)
