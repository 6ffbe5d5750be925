import math

import pytest

from src.core.logging import configure_logging
from src.modules.algebra.schemas import LatticeSpec
from src.modules.counting.enums import RegionKind
from src.modules.counting.schemas import Region
from src.modules.testfn.schemas import SpectralWindow


@pytest.fixture(autouse=True, scope="session")
def quiet_logging():
    configure_logging(log_level="ERROR", force=True)


@pytest.fixture
def unit_spec() -> LatticeSpec:
    """M2(Z): level 1, l = 1, g = I."""
    return LatticeSpec(N=1)


@pytest.fixture
def unit_omega() -> Region:
    """Omega*(1, 1)."""
    return Region(RegionKind.OMEGA, 1, 1)


@pytest.fixture
def unit_window() -> SpectralWindow:
    return SpectralWindow.unit(0.0)


@pytest.fixture
def e2pi() -> float:
    """exp(-2 pi), the unit-window value at P = 1."""
    return math.exp(-2.0 * math.pi)
