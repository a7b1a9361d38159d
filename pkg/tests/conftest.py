import numpy as np
import pytest

from fbf import problems


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def catalog():
    return problems.default_instances()
