import numpy as np
import pytest

from sharpturn import two_turn_tunneling as tun
from sharpturn.geometry import ModelParams

BETA = np.pi / 3
ALPHA = np.pi / 30


@pytest.fixture(scope="session")
def two_turn():
    return ModelParams(beta=BETA, alpha=ALPHA)


@pytest.fixture(scope="session")
def glued(two_turn):
    """Glued reduced curve and its branches on the default grid."""
    return tun.suppression_curve(two_turn)


@pytest.fixture(scope="session")
def glued_exact(two_turn):
    """Same curve refined through the exact matching system (coarser grid)."""
    grid = np.geomspace(1e-4, 5e-2, 600)
    return tun.suppression_curve(two_turn, grid, exact=True)
