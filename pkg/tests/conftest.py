import math

import numpy as np
import pytest

from epr_steering.steering.qubit import QubitState, matrix_of
from epr_steering.steering.states import FamilyParams, make_family_state, make_werner, product_state


@pytest.fixture
def bell():
    """(|HH> + |VV>)/sqrt(2) as a projector"""
    return make_werner(1.0)


@pytest.fixture
def one_way_state():
    """p = 0.6, theta = pi/12: inside the three-setting one-way region"""
    return make_family_state(FamilyParams(0.6, math.pi / 12))


@pytest.fixture
def maximally_mixed():
    return make_werner(0.0)


@pytest.fixture
def product():
    """Alice Bloch (0.3, 0, 0), Bob Bloch (0, 0, 0.5)"""
    return product_state(QubitState(matrix_of([0.3, 0, 0])), QubitState(matrix_of([0, 0, 0.5])))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
