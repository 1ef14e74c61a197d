import numpy as np
import pytest
from hypothesis import settings

from cauchydirac.fields import Grid3

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def grid16():
    return Grid3(4.0, 16)


@pytest.fixture(scope="session")
def small_grid():
    return Grid3(2.0, 8)
