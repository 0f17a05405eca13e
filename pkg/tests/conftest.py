import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dwelltime.potentials import gaussian_well, rectangular_barrier, square_well


@pytest.fixture(scope="session")
def sw10():
    """The workhorse attractive well: depth 10, radius 1."""
    return square_well(10.0, 1.0)


@pytest.fixture(scope="session")
def barrier5():
    """Rectangular barrier height 5, width 1."""
    return rectangular_barrier(5.0, 1.0)


@pytest.fixture(scope="session")
def gauss5():
    """Gaussian well depth 5, sigma 0.5, truncated at 4 sigma."""
    return gaussian_well(5.0, 0.5)
