import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def mc_within(samples, target, n_se=3.0):
    """True when the sample mean lies within ``n_se`` standard errors of ``target``."""
    x = np.asarray(samples, dtype=float)
    se = x.std(ddof=1) / np.sqrt(len(x))
    return abs(x.mean() - target) <= n_se * se, x.mean(), se


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
