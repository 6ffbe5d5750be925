"""
Enums for the counting module.
"""

from enum import Enum


class RegionKind(str, Enum):
    """Archimedean region families; UNION is Omega or Psi."""

    OMEGA = "omega"
    PSI = "psi"
    UNION = "union"


class Sublattice(str, Enum):
    """Which lattice of R(l;g) is enumerated."""

    FULL = "full"
    TRACE_FREE = "trace-free"


class Proposition(str, Enum):
    """Counting statements checked by verify_bound."""

    OMEGA = "omega"
    PSI = "psi"
    TRACE_FREE = "trace-free"
    HEART = "heart"
    UPPER_TRIANGULAR = "upper-triangular"
