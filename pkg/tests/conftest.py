import numpy as np
import pytest

from leafstab.vehicle_model import REF_PARAMS


@pytest.fixture
def ref():
    return REF_PARAMS


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)
