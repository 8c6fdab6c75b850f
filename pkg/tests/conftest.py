import numpy as np
import pytest

from channelflow.fields import Grid


@pytest.fixture
def grid():
    return Grid(16, 16, 9)


@pytest.fixture
def grid_acc():
    """The acceptance-benchmark grid."""
    return Grid(32, 32, 17)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)
