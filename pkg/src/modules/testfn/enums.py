"""
Enums for the test-function module.
"""

from enum import Enum


class WindowType(str, Enum):
    """Shape of the spectral weight h(t)."""

    UNIT = "unit"
    COSINE_SUM = "cosine-sum"
    GAUSSIAN = "gaussian"


class PhiRoute(str, Enum):
    """Independent evaluation routes of the test function."""

    ABEL = "abel"
    SPECTRAL = "spectral"
