import numpy as np
import pytest

from kelvinlab.vstate import solve_kelvin


@pytest.fixture(scope="session")
def wave3():
    return solve_kelvin(3, 0.05)


@pytest.fixture(scope="session")
def wave3_small():
    return solve_kelvin(3, 0.02)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
