import math

import pytest

from nodalscope.geometry import TorusModel
from nodalscope.spectrum import mode_spec, random_eigenfunction


@pytest.fixture(scope="session")
def t2():
    return TorusModel(2)


@pytest.fixture(scope="session")
def t3():
    return TorusModel(3)


@pytest.fixture(scope="session")
def sin1(t2):
    """psi = sqrt(2) sin(2 pi x)."""
    return mode_spec([((1, 0), 0.0, math.sqrt(2))], t2)


@pytest.fixture(scope="session")
def product_spec(t2):
    """psi = 2 sin(2 pi x) sin(2 pi y) = cos(2pi(x-y)) - cos(2pi(x+y))."""
    return mode_spec([((1, -1), 1.0, 0.0), ((1, 1), -1.0, 0.0)], t2)


@pytest.fixture(scope="session")
def sin_k(t2):
    def make(k: int):
        return mode_spec([((k, 0), 0.0, math.sqrt(2))], t2)

    return make


@pytest.fixture(scope="session")
def rand25(t2):
    return random_eigenfunction(25, t2, 7)


@pytest.fixture(scope="session")
def rand100(t2):
    return random_eigenfunction(100, t2, 3)
