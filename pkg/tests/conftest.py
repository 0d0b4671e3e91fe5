import numpy as np
import pytest

from kakeyalab.freqdecomp import make_profile, make_tube_system
from kakeyalab.grid import make_grid


@pytest.fixture(scope="session")
def fejer():
    return make_profile()


@pytest.fixture(scope="session")
def grid16():
    return make_grid(3, 16, 8.0)


@pytest.fixture(scope="session")
def grid32():
    return make_grid(3, 32, 8.0)


@pytest.fixture(scope="session")
def grid64_pi():
    # small torus: Nyquist = 64, annuli k <= 5 fully resolved
    return make_grid(3, 64, np.pi)


@pytest.fixture(scope="session")
def tube_systems(grid64_pi):
    cache = {}

    def get(k, grid=grid64_pi):
        key = (k, grid)
        if key not in cache:
            cache[key] = make_tube_system(k, grid)
        return cache[key]

    return get
