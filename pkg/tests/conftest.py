import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from bmovar.semigroup import WraparoundWarning

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(autouse=True)
def _quiet_wraparound():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", WraparoundWarning)
        yield


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
