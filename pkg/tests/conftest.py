import math

import pytest
from hypothesis import settings

from boseldp import ModelParams

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

BETA_NORM = 1.0 / (4.0 * math.pi)


@pytest.fixture
def beta_norm():
    return BETA_NORM


@pytest.fixture
def ideal3():
    return ModelParams("ideal", 3, 1.0, mu=-0.2)
