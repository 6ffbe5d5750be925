"""
Service layer for the special-function module.

Public entry points for K_{it}, Xi and Q(s, x), plus the sweep that
compares the functions and their first two derivatives with the decay
envelopes

    K:  (1 + |log x|) ((1 + |t|)/x)^j e^{-pi|t|/2}
    Xi: 1 | log(u) u^{-1/2}, (1+t^2) {1 | log(u) u^{-3/2}},
        (1+t^2) {u^{-1} | log(u) u^{-5/2}}   (u <= 2 | u >= 2)
"""

import math
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field

from src.core import constants
from src.core.logging import get_logger, log_performance

from .bessel import bessel_k_imag, bessel_k_imag_scaled, bessel_k_imag_scaled_many
from .gamma import incomplete_gamma_q
from .schemas import AppendixReport, EnvelopeRow, Precision
from .spherical import spherical_xi, spherical_xi_many, xi_mehler, xi_series

logger = get_logger("specfun.service")

__all__ = [
    "AppendixGrid",
    "bessel_k_imag",
    "bessel_k_imag_scaled",
    "bessel_k_imag_scaled_many",
    "incomplete_gamma_q",
    "spherical_xi",
    "spherical_xi_many",
    "verify_appendix_bounds",
    "xi_mehler",
    "xi_series",
]


class AppendixGrid(BaseModel):
    """Sample points for the envelope sweep."""

    t_values: list[float] = Field(default_factory=lambda: [-10.0, -5.0, -1.0, 0.0, 1.0, 2.5, 5.0, 10.0])
    x_values: list[float] = Field(default_factory=lambda: [0.01, 0.05, 0.2, 1.0, 3.0, 8.0, 20.0])
    u_values: list[float] = Field(default_factory=lambda: [0.05, 0.3, 1.0, 2.0, 5.0, 20.0, 100.0, 200.0])

    @classmethod
    def fast(cls) -> "AppendixGrid":
        return cls(t_values=[0.0, 1.0, 5.0], x_values=[0.05, 1.0, 5.0], u_values=[0.3, 2.0, 100.0])


def bessel_envelope(t: float, x: float, j: int) -> float:
    """Envelope of the j-th x-derivative of e^{pi|t|/2} K_{it}(x)."""
    return (1.0 + abs(math.log(x))) * ((1.0 + abs(t)) / x) ** j


def xi_envelope(t: float, u: float, j: int) -> float:
    if j == 0:
        return 1.0 if u <= 2 else math.log(u) / math.sqrt(u)
    weight = 1.0 + t * t
    if j == 1:
        return weight * (1.0 if u <= 2 else math.log(u) * u**-1.5)
    return weight * (1.0 / u if u <= 2 else math.log(u) * u**-2.5)


def _central(f_minus: float, f0: float, f_plus: float, h: float, j: int) -> float:
    if j == 0:
        return f0
    if j == 1:
        return (f_plus - f_minus) / (2 * h)
    return (f_plus - 2 * f0 + f_minus) / (h * h)


def _max_row(function: str, j: int, samples: Sequence[tuple[float, float, float, float]]) -> EnvelopeRow:
    """samples: (t, arg, |f^(j)|, envelope)."""
    ratios = [value / env for _, _, value, env in samples]
    k = int(np.argmax(ratios))
    return EnvelopeRow(
        function=function,
        j=j,
        max_ratio=float(ratios[k]),
        argmax=(samples[k][0], samples[k][1]),
        min_envelope=float(min(env for *_, env in samples)),
    )


@log_performance("specfun.service")
def verify_appendix_bounds(
    grid: Optional[AppendixGrid] = None,
    prec: Optional[Precision] = None,
    bessel_constant: float = constants.BESSEL_ENVELOPE_CONSTANT,
    xi_constant: float = constants.XI_ENVELOPE_CONSTANT,
) -> AppendixReport:
    """
    Maximum |f^(j)| / envelope for K_{it} and Xi, j = 0, 1, 2.

    Derivatives are central differences with step 1e-3 * argument. The
    sweep passes when every ratio is finite, every envelope is positive
    and the maxima stay below the frozen constants.
    """
    grid = grid or AppendixGrid()
    prec = prec or Precision.default()
    rows: list[EnvelopeRow] = []

    bessel_samples: dict[int, list] = {0: [], 1: [], 2: []}
    for t in grid.t_values:
        for x in grid.x_values:
            h = 1e-3 * x
            f_minus, f0, f_plus = (bessel_k_imag_scaled(t, v, prec) for v in (x - h, x, x + h))
            for j in (0, 1, 2):
                value = abs(_central(f_minus, f0, f_plus, h, j))
                bessel_samples[j].append((t, x, value, bessel_envelope(t, x, j)))
    rows.extend(_max_row("K", j, bessel_samples[j]) for j in (0, 1, 2))

    xi_samples: dict[int, list] = {0: [], 1: [], 2: []}
    t_arr = np.asarray(grid.t_values, dtype=float)
    for u in grid.u_values:
        h = 1e-3 * u
        f_minus, f0, f_plus = (spherical_xi_many(t_arr, v, prec) for v in (u - h, u, u + h))
        for i, t in enumerate(t_arr):
            for j in (0, 1, 2):
                value = abs(_central(f_minus[i], f0[i], f_plus[i], h, j))
                xi_samples[j].append((float(t), u, value, xi_envelope(float(t), u, j)))
    rows.extend(_max_row("Xi", j, xi_samples[j]) for j in (0, 1, 2))

    failure = None
    for row in rows:
        limit = bessel_constant if row.function == "K" else xi_constant
        if not math.isfinite(row.max_ratio):
            failure = f"{row.function} j={row.j}: non-finite ratio"
        elif row.min_envelope <= 0:
            failure = f"{row.function} j={row.j}: non-positive envelope"
        elif row.max_ratio > limit:
            failure = f"{row.function} j={row.j}: ratio {row.max_ratio:.3e} exceeds {limit:.3e}"
        if failure:
            break

    logger.info(
        "Appendix envelopes checked",
        event="appendix_bounds_complete",
        rows=len(rows),
        max_ratio=max(row.max_ratio for row in rows),
        passed=failure is None,
    )
    return AppendixReport(
        rows=rows,
        bessel_constant=bessel_constant,
        xi_constant=xi_constant,
        passed=failure is None,
        failure=failure,
    )
