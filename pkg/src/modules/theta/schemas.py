"""
Schemas for the theta module.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import ClassVar, Optional

from pydantic import BaseModel, ConfigDict, Field

from src.modules.algebra.schemas import LatticeSpec
from src.modules.counting.schemas import ReportMetadata
from src.modules.testfn.schemas import SpectralWindow


class ThetaConfig(BaseModel):
    """Lattice, window and truncation settings of one theta evaluation."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    spec: LatticeSpec
    window: SpectralWindow = Field(default_factory=SpectralWindow.unit)
    tol: float = Field(default=1e-10, gt=0.0)
    p_cut: Optional[float] = Field(default=None, gt=0.0, description="Initial truncation; derived from tol if unset")
    max_doublings: int = Field(default=8, ge=1)
    budget: Optional[int] = Field(default=None, gt=0)


@dataclass(frozen=True)
class ThetaValue:
    """
    Truncated theta value.

    null_contribution is the det = 0 part (evaluated on the null locus)
    and certificate the a-priori bound on the discarded shells.
    """

    value: complex
    p_cut: float
    terms: int
    null_contribution: complex
    certificate: float
    converged: bool
    doublings: int


@dataclass(frozen=True)
class DetProfile:
    """Class sums n -> sum_{det gamma = n, gamma != 0} Phi(y^1/2 gamma), ordered by n."""

    sums: dict[Fraction, float]
    p_cut: float
    terms: int

    @property
    def l2(self) -> float:
        return float(sum(v * v for v in self.sums.values()))


class BoundGrid(BaseModel):
    """
    Limits of the (l, L, delta, heart) scan.

    Defaults follow the reduction's ranges: l | N, dyadic
    l^-1/2 <= L <= (N T)^1/2 / l, dyadic T^-2 <= delta <= 1 and dyadic
    delta^1/2 / T <= heart <= delta.
    """

    ell_values: Optional[list[int]] = None
    L_max: Optional[float] = Field(default=None, gt=0.0)
    delta_min: Optional[float] = Field(default=None, gt=0.0, le=1.0)


class BoundRow(BaseModel):
    """(l L^2 heart)^-1 pair counts of both base points at one grid point."""

    N: int
    ell: int
    L: float
    delta: float
    heart: float
    count_g1: int
    count_g2: int
    value: float
    argmax: str


class BoundReport(BaseModel):
    """Countable right-hand side of the geometric fourth-moment bound."""

    CSV_COLUMNS: ClassVar[tuple[str, ...]] = (
        "N",
        "ell",
        "L",
        "delta",
        "heart",
        "count_g1",
        "count_g2",
        "value",
        "argmax",
    )

    N: int
    T: float
    g1: str
    g2: str
    rows: list[BoundRow]
    maximum: float
    metadata: ReportMetadata
