"""
Run configuration schemas.

A RunConfig groups the command-specific parameter blocks that a run file
(or the CLI flags) supplies: lattice grid, spectral window, precision,
output and parallelism settings.
"""

from fractions import Fraction
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.config import settings
from src.modules.counting.schemas import CountGrid
from src.modules.specfun.schemas import Precision
from src.modules.testfn.enums import WindowType
from src.modules.testfn.schemas import SpectralWindow


def parse_number(text: str) -> float:
    """Float from '0.25', '1/4' or '1e-3'."""
    text = text.strip()
    return float(Fraction(text)) if "/" in text else float(text)


class RunSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    command: str = "verify-bound"
    output_dir: Optional[str] = None
    workers: int = Field(default_factory=lambda: settings.workers.max_workers, ge=1)
    budget: int = Field(default_factory=lambda: settings.enumeration.budget, gt=0)
    log_level: Optional[str] = None

    @property
    def output_path(self) -> Path:
        return Path(self.output_dir) if self.output_dir else settings.output.output_dir


class LatticeSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    N: list[int] = Field(default_factory=lambda: [1])
    ell_mode: str = "one-and-N"
    deltas: list[float] = Field(default_factory=lambda: [1.0])
    Ls: list[float] = Field(default_factory=lambda: [1.0])
    hearts: list[Optional[float]] = Field(default_factory=lambda: [None])
    g: list[str] = Field(default_factory=lambda: ["I"])

    @field_validator("Ls")
    @classmethod
    def finite_positive(cls, v: list[float]) -> list[float]:
        if any(not (0 < x < float("inf")) for x in v):
            raise ValueError("L values must be positive and finite")
        return v

    def to_grid(self) -> CountGrid:
        return CountGrid(
            N_values=self.N,
            ell_mode=self.ell_mode,
            deltas=self.deltas,
            Ls=self.Ls,
            hearts=self.hearts,
            g_values=self.g,
        )


class WindowSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: WindowType = WindowType.UNIT
    alpha: float = 0.0
    T: Optional[float] = None
    sigma: Optional[float] = None
    coefficients: list[float] = Field(default_factory=list)
    frequencies: list[float] = Field(default_factory=list)

    def to_window(self) -> SpectralWindow:
        if self.kind is WindowType.UNIT:
            return SpectralWindow.long(self.T) if self.T is not None else SpectralWindow.unit(self.alpha)
        if self.kind is WindowType.COSINE_SUM:
            return SpectralWindow.cosine_sum(self.coefficients, self.frequencies, self.alpha)
        return SpectralWindow.gaussian(self.sigma, self.alpha)


class PrecisionSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    target_rel_tol: float = Field(default_factory=lambda: settings.numerics.target_rel_tol, gt=0.0)
    working_digits: int = Field(default_factory=lambda: settings.numerics.working_digits, ge=16)

    def to_precision(self) -> Precision:
        return Precision(target_rel_tol=self.target_rel_tol, working_digits=self.working_digits)


class RunConfig(BaseModel):
    """Complete parameter set of one run."""

    model_config = ConfigDict(extra="forbid")

    run: RunSection = Field(default_factory=RunSection)
    lattice: LatticeSection = Field(default_factory=LatticeSection)
    window: WindowSection = Field(default_factory=WindowSection)
    precision: PrecisionSection = Field(default_factory=PrecisionSection)
