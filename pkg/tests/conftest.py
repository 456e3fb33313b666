import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sublog.core import SortedKeyArray

settings.register_profile("default", deadline=None, max_examples=150,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def arr(values, lo=0.0, hi=1.0):
    return SortedKeyArray(np.asarray(values, dtype=np.float64), lo, hi)
