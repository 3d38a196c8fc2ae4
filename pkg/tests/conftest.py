import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from micropolar.spectral import make_grid


@pytest.fixture(scope="session")
def grid8():
    return make_grid(8, 2 * np.pi)


@pytest.fixture(scope="session")
def grid16():
    return make_grid(16, 2 * np.pi)


@pytest.fixture(scope="session")
def grid32():
    return make_grid(32, 2 * np.pi)


@pytest.fixture(scope="session")
def grid64():
    return make_grid(64, 2 * np.pi)
