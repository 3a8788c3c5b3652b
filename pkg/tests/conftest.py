import numpy as np
import pytest

from statelab import Grid, KernelSpace, PhysicsParams


@pytest.fixture(scope="session")
def grid():
    return Grid(512, -16.0, 16.0, periodic=True)


@pytest.fixture(scope="session")
def ks(grid):
    return KernelSpace(grid, 0.5)


@pytest.fixture(scope="session")
def phys():
    return PhysicsParams(hbar=1.0, mass=1.0)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
