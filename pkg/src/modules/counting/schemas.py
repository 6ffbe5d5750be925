"""
Schemas for the counting module.

Regions and constraints are small frozen value objects; grids and reports
are pydantic models so they can be validated from run configuration and
serialized into CSV/JSON reports.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional

import numpy as np
from pydantic import BaseModel, Field, field_validator

from src.core.exceptions import ValidationError
from src.modules.algebra.schemas import TailoredMatrix, as_fraction

from .enums import Proposition, RegionKind, Sublattice


@dataclass(frozen=True)
class Region:
    """
    Omega(delta, L), Psi(delta, L) or their union; exclude_zero gives the
    starred variant.
    """

    kind: RegionKind
    delta: Fraction
    L: Fraction
    exclude_zero: bool = True

    def __post_init__(self):
        object.__setattr__(self, "kind", RegionKind(self.kind))
        object.__setattr__(self, "delta", as_fraction(self.delta))
        object.__setattr__(self, "L", as_fraction(self.L))
        if not (0 < self.delta <= 1):
            raise ValidationError("delta must lie in (0, 1]", field="delta", value=self.delta)
        if self.L <= 0:
            raise ValidationError("L must be positive", field="L", value=self.L)

    def scaled(self, L) -> "Region":
        return Region(self.kind, self.delta, as_fraction(L), self.exclude_zero)

    def contains(self, P, rotation, dilation) -> bool:
        """Membership from conjugated P, b^2+c^2 and a^2+d^2 (exact or float)."""
        L2 = self.L * self.L
        if P > L2:
            return False
        in_omega = rotation <= self.delta * L2
        in_psi = dilation <= self.delta * L2
        if self.kind is RegionKind.OMEGA:
            return in_omega
        if self.kind is RegionKind.PSI:
            return in_psi
        return in_omega or in_psi

    @property
    def label(self) -> str:
        star = "*" if self.exclude_zero else ""
        return f"{self.kind.value}{star}(delta={self.delta},L={self.L})"


@dataclass(frozen=True)
class PairConstraint:
    """Equal determinants always; heart adds |diamond_1 - diamond_2| <= heart L^4."""

    heart: Optional[Fraction] = None

    def __post_init__(self):
        if self.heart is not None:
            heart = as_fraction(self.heart)
            if heart < 0:
                raise ValidationError("heart must be nonnegative", field="heart", value=heart)
            object.__setattr__(self, "heart", heart)

    @property
    def require_equal_det(self) -> bool:
        return True


@dataclass
class RegionEnumeration:
    """
    Lattice points of R(l;g) in a region.

    Rows are sorted lexicographically by coefficient vector. Entries are the
    original matrices scaled by l (integers); det_key = l * det. The
    conjugated invariants are integers scaled by S (exact mode) or floats.
    """

    spec_descriptor: str
    region: Region
    sublattice: Sublattice
    coefficients: np.ndarray
    entries: np.ndarray
    ell: int
    det_key: np.ndarray
    P: np.ndarray
    diamond: np.ndarray
    exact: bool
    scale: int = 1
    slack_only: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    def __len__(self) -> int:
        return len(self.coefficients)

    def matrices(self) -> Iterator[TailoredMatrix]:
        """Members as exact matrices in original (unconjugated) coordinates."""
        for row in self.entries:
            yield TailoredMatrix.from_entries(*(Fraction(int(v), self.ell) for v in row))

    def conjugated_norms(self) -> np.ndarray:
        """P(g^-1 gamma g) as floats."""
        if self.exact:
            return self.P.astype(float) / (2.0 * self.scale**2)
        return np.asarray(self.P, dtype=float)

    def det_classes(self) -> dict[Fraction, int]:
        keys, counts = np.unique(self.det_key, return_counts=True)
        return {Fraction(int(k), self.ell): int(c) for k, c in zip(keys, counts)}


@dataclass(frozen=True)
class PairCountResult:
    """Ordered pair count; count_slack differs only under irrational g."""

    count: int
    count_slack: int
    members: int
    det_classes: int


@dataclass(frozen=True)
class SuccessiveMinima:
    minima: tuple[float, ...]
    vectors: tuple[tuple[int, ...], ...]
    scale_doublings: int


@dataclass(frozen=True)
class LatticePointCount:
    """|K cap Lambda| including 0 against prod(1 + 1/lambda_i)."""

    count: int
    product: float
    ratio: float
    minima: tuple[float, ...]


@dataclass(frozen=True)
class EmptinessThreshold:
    """
    Certified threshold: the starred region is empty exactly when
    L < threshold. scale is min(l^-1/2, l^-1 H^-1 delta^-1/2) and
    constant = threshold / scale.
    """

    threshold: float
    scale: float
    constant: float
    height: float


class CountGrid(BaseModel):
    """Finite parameter grid for a proposition sweep."""

    N_values: list[int] = Field(..., min_length=1)
    ell_mode: str = Field(default="one-and-N", description="one | N | one-and-N | all")
    deltas: list[float] = Field(default_factory=lambda: [1.0])
    Ls: list[float] = Field(default_factory=lambda: [1.0])
    hearts: list[Optional[float]] = Field(default_factory=lambda: [None])
    g_values: list[str] = Field(default_factory=lambda: ["I"])

    @field_validator("ell_mode")
    @classmethod
    def known_mode(cls, v: str) -> str:
        if v not in ("one", "N", "one-and-N", "all"):
            raise ValueError(f"unknown ell mode {v!r}")
        return v

    @field_validator("deltas")
    @classmethod
    def deltas_in_range(cls, v: list[float]) -> list[float]:
        if any(not (0 < d <= 1) for d in v):
            raise ValueError("deltas must lie in (0, 1]")
        return v


class CountRow(BaseModel):
    """One grid point of a CountReport."""

    N: int
    ell: int
    delta: float
    L: float
    heart: Optional[float] = None
    g: str
    count: int
    rhs: float
    ratio: float
    flag: bool
    volume: Optional[float] = Field(default=None, description="Volume heuristic (heart rows)")


class SkippedPoint(BaseModel):
    """Grid point whose enumeration exceeded the budget."""

    N: int
    ell: int
    delta: float
    L: float
    heart: Optional[float] = None
    g: str
    reason: str


class ReportMetadata(BaseModel):
    timestamp: str
    config_hash: str
    runtime_s: float
    constants_version: str
    skipped: list[SkippedPoint] = Field(default_factory=list)


class CountReport(BaseModel):
    """Grid of counts, right-hand sides, ratios and flags."""

    proposition: Proposition
    constant: float
    rows: list[CountRow]
    metadata: ReportMetadata

    @property
    def flagged(self) -> list[CountRow]:
        return [row for row in self.rows if row.flag]

    @property
    def max_ratio(self) -> float:
        return max((row.ratio for row in self.rows), default=0.0)
