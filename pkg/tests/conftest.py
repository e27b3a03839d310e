import numpy as np
import pytest

from ewkv.core import make_params


@pytest.fixture(scope="session")
def params12():
    return make_params(1.0, 2.0)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
