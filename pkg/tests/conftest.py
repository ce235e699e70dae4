import numpy as np
import pytest

from elastoflow.elasticity import ElasticTensor
from elastoflow.grid import Grid


@pytest.fixture
def grid64():
    return Grid(1, 64)


@pytest.fixture
def grid128():
    return Grid(1, 128)


@pytest.fixture
def grid2d():
    return Grid(2, 16)


@pytest.fixture
def tensor():
    return ElasticTensor.isotropic(2.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
