"""
Schemas for the test-function module.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.core.exceptions import ValidationError

from .enums import PhiRoute, WindowType

HALF_PI = 0.5 * math.pi


class SpectralWindow(BaseModel):
    """
    Spectral weight h(t) cosh(alpha t) of the test function.

    Unit windows have h = 1, cosine sums h(t) = sum c_j cos(beta_j t),
    Gaussian envelopes h(t) = exp(-t^2 / sigma^2). The long window of
    length T is the unit window with alpha = pi/2 - 1/T.
    """

    model_config = ConfigDict(frozen=True)

    kind: WindowType = WindowType.UNIT
    alpha: float = Field(default=0.0, ge=0.0)
    coefficients: tuple[float, ...] = ()
    frequencies: tuple[float, ...] = ()
    sigma: Optional[float] = None
    T: Optional[float] = None

    @model_validator(mode="after")
    def check_window(self) -> "SpectralWindow":
        if not self.alpha < HALF_PI:
            raise ValidationError("alpha must be strictly below pi/2", field="alpha", value=self.alpha)
        if self.kind is WindowType.COSINE_SUM:
            if not self.coefficients or len(self.coefficients) != len(self.frequencies):
                raise ValidationError(
                    "A cosine sum needs matching coefficients and frequencies",
                    field="coefficients",
                    value=(self.coefficients, self.frequencies),
                )
            widest = max(abs(beta) for beta in self.frequencies)
            if not widest < HALF_PI - self.alpha:
                raise ValidationError(
                    "Cosine frequencies must satisfy |beta| < pi/2 - alpha",
                    field="frequencies",
                    value=self.frequencies,
                )
        if self.kind is WindowType.GAUSSIAN and not (self.sigma is not None and self.sigma > 0):
            raise ValidationError("Gaussian windows need sigma > 0", field="sigma", value=self.sigma)
        return self

    @classmethod
    def unit(cls, alpha: float = 0.0) -> "SpectralWindow":
        return cls(kind=WindowType.UNIT, alpha=alpha)

    @classmethod
    def long(cls, T: float) -> "SpectralWindow":
        """Unit window with alpha = pi/2 - 1/T."""
        if not T >= 3:
            raise ValidationError("Long windows need T >= 3", field="T", value=T)
        return cls(kind=WindowType.UNIT, alpha=HALF_PI - 1.0 / T, T=T)

    @classmethod
    def cosine_sum(cls, coefficients, frequencies, alpha: float = 0.0) -> "SpectralWindow":
        return cls(
            kind=WindowType.COSINE_SUM,
            alpha=alpha,
            coefficients=tuple(float(c) for c in coefficients),
            frequencies=tuple(float(b) for b in frequencies),
        )

    @classmethod
    def gaussian(cls, sigma: float, alpha: float = 0.0) -> "SpectralWindow":
        return cls(kind=WindowType.GAUSSIAN, alpha=alpha, sigma=sigma)

    @property
    def decay_rate(self) -> float:
        """Exponential decay rate of h(t) cosh(alpha t) e^{-pi|t|/2}."""
        rate = HALF_PI - self.alpha
        if self.kind is WindowType.COSINE_SUM:
            rate -= max(abs(beta) for beta in self.frequencies)
        return rate

    def h(self, t) -> np.ndarray:
        """The weight h(t), vectorised."""
        t = np.asarray(t, dtype=float)
        if self.kind is WindowType.UNIT:
            return np.ones_like(t)
        if self.kind is WindowType.COSINE_SUM:
            out = np.zeros_like(t)
            for c, beta in zip(self.coefficients, self.frequencies):
                out = out + c * np.cos(beta * t)
            return out
        return np.exp(-((t / self.sigma) ** 2))

    def point_masses(self) -> list[tuple[float, float]]:
        """(weight, |beta|) pairs of g(l) dl folded onto l >= 0; empty for Gaussian."""
        if self.kind is WindowType.UNIT:
            return [(1.0, 0.0)]
        if self.kind is WindowType.COSINE_SUM:
            return [(c, abs(beta)) for c, beta in zip(self.coefficients, self.frequencies)]
        return []

    def descriptor(self) -> str:
        if self.kind is WindowType.UNIT:
            return f"unit:T={self.T:g}" if self.T is not None else f"unit:alpha={self.alpha:.12g}"
        if self.kind is WindowType.COSINE_SUM:
            terms = ",".join(f"{c:g}@{b:g}" for c, b in zip(self.coefficients, self.frequencies))
            return f"cosine-sum:alpha={self.alpha:.12g}:{terms}"
        return f"gaussian:sigma={self.sigma:g}:alpha={self.alpha:.12g}"


@dataclass(frozen=True)
class PhiValue:
    """Value of the test function at one (P, tau) with its provenance."""

    value: float
    route: PhiRoute
    error_estimate: float
    null_locus: bool = False

    def __post_init__(self):
        if not self.error_estimate >= 0:
            raise ValidationError(
                "error_estimate must be nonnegative", field="error_estimate", value=self.error_estimate
            )


@dataclass(frozen=True)
class QValue:
    """Q(P; tau) and its P-derivative."""

    Q: np.ndarray
    Q_P: np.ndarray
