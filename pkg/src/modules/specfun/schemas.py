"""
Schemas for the special-function module.
"""

from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.config import settings


class Precision(BaseModel):
    """Target relative tolerance and working digits of the mpmath paths."""

    model_config = ConfigDict(frozen=True)

    target_rel_tol: float = Field(default=1e-10, gt=0.0)
    working_digits: int = Field(default=30, ge=16)

    @model_validator(mode="after")
    def tolerance_reachable(self) -> "Precision":
        if self.target_rel_tol < 10.0 ** (-self.working_digits + 8):
            raise ValueError(
                f"target_rel_tol={self.target_rel_tol} needs more than {self.working_digits} working digits"
            )
        return self

    @classmethod
    def default(cls) -> "Precision":
        return cls(
            target_rel_tol=settings.numerics.target_rel_tol,
            working_digits=settings.numerics.working_digits,
        )


class EnvelopeRow(BaseModel):
    """Largest |f^(j)| / envelope over a grid."""

    function: str
    j: int
    max_ratio: float
    argmax: tuple[float, float]
    min_envelope: float


class AppendixReport(BaseModel):
    rows: list[EnvelopeRow]
    bessel_constant: float
    xi_constant: float
    passed: bool
    failure: Optional[str] = None
