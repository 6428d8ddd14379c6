import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import linalg  # noqa: E402


@pytest.fixture
def paulis():
    _, sx, sy, sz = linalg.pauli()
    return sx, sy, sz


@pytest.fixture
def rng():
    return linalg.RandomStream(1234)


@pytest.fixture
def identity2():
    return np.eye(2, dtype=complex)
