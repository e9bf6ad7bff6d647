import numpy as np
import pytest

from stokeslame import TimeGrid, build_geometry, discretize


@pytest.fixture(scope="session")
def flat_r0():
    return discretize(build_geometry("flat-channel", 0.0, 0))


@pytest.fixture(scope="session")
def flat_r1():
    return discretize(build_geometry("flat-channel", 0.0, 1))


@pytest.fixture(scope="session")
def curved_r1():
    return discretize(build_geometry("curved-interface", 0.1, 1))


@pytest.fixture(scope="session")
def grid8():
    return TimeGrid(1.0, 8)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
