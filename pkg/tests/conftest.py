import numpy as np
import pytest

from bzmarble import SimParams, build_disc


@pytest.fixture(scope="session")
def disc5():
    return build_disc(5)


@pytest.fixture(scope="session")
def disc30():
    return build_disc(30)


@pytest.fixture()
def params():
    return SimParams()


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
