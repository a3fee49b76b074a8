import os
import sys

import numpy as np
import pytest

# Allow running the suite from a source checkout without installing.
_SRC = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "src")
if _SRC not in sys.path:
    sys.path.insert(0, _SRC)

from torusphase.fields import GridSpec, ScalarField, grid_coords  # noqa: E402
from torusphase.functionals import make_background  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def grid8():
    return GridSpec(8)


def standard_bump(grid, amplitude=0.1):
    """amplitude * sin(2 pi x1) sin(2 pi x3), the stock background wiggle."""
    x = grid_coords(grid)
    vals = amplitude * np.sin(2 * np.pi * x[0]) * np.sin(2 * np.pi * x[2])
    return ScalarField(grid, np.broadcast_to(vals, grid.shape).copy())


@pytest.fixture
def bg8(grid8):
    """Identity alpha, constant part 3*I plus the stock bump: hypercritical."""
    return make_background(grid8, np.eye(2), 3.0 * np.eye(2), standard_bump(grid8))
