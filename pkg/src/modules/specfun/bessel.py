"""
K-Bessel functions of imaginary order K_{it}(x).

Two independent paths:

- series: K_{it}(x) = pi Im(I_{-it}(x)) / sinh(pi t), with
  I_{-it}(x) = sum_m (x/2)^{2m-it} / (m! Gamma(1-it+m)) and the Gamma
  factors built by recurrence;
- quadrature: K_{it}(x) = int_0^inf exp(-x cosh u) cos(t u) du by
  tanh-sinh quadrature on oscillation-sized subintervals.

Both run in mpmath at raised precision; the scaled value
e^{pi|t|/2} K_{it}(x) is formed before converting to float, so it neither
underflows nor overflows for |t| <= 200.
"""

import math
from typing import Iterable, Optional

import mpmath
import numpy as np

from src.core.exceptions import PrecisionError, ValidationError
from src.core.logging import get_logger

from .schemas import Precision

logger = get_logger("specfun.bessel")

SERIES_MAX_X = 60.0
# x range on which both paths are compared when certifying
CERTIFY_RANGE = (0.5, 2.0)

_LN10 = math.log(10.0)


def _series_digits(t: float, x: float, digits: int) -> int:
    extra = math.pi * abs(t) / (2 * _LN10) + 2 * x / _LN10 + 10
    if t != 0:
        extra += max(0.0, -math.log10(abs(t)))
    return int(digits + extra)


def _series(t: float, x: float, digits: int) -> mpmath.mpf:
    """Power series; returns the mp value of e^{pi|t|/2} K_{it}(x)."""
    with mpmath.workdps(_series_digits(t, x, digits)):
        if t == 0:
            return mpmath.besselk(0, x)
        x_mp = mpmath.mpf(x)
        nu = mpmath.mpc(0, -t)
        q = (x_mp / 2) ** 2
        term = (x_mp / 2) ** nu / mpmath.gamma(1 + nu)
        total = term
        eps = mpmath.mpf(10) ** (-mpmath.mp.dps + 2)
        m = 0
        while True:
            m += 1
            term = term * q / (m * (m + nu))
            total += term
            if m * m > q and abs(term) <= eps * abs(total):
                break
        value = mpmath.pi * total.imag / mpmath.sinh(mpmath.pi * t)
        return value * mpmath.exp(mpmath.pi * abs(t) / 2)


def _quadrature(t: float, x: float, digits: int) -> mpmath.mpf:
    """cosh integral; returns the mp value of e^{pi|t|/2} K_{it}(x)."""
    dps = int(digits + math.pi * abs(t) / (2 * _LN10) + 20)
    with mpmath.workdps(dps):
        x_mp = mpmath.mpf(x)
        t_mp = mpmath.mpf(t)
        # exp(-x cosh u) < 10^-dps beyond u_max
        u_max = mpmath.acosh(1 + (dps * mpmath.log(10) + 10) / x_mp)
        pieces = max(4, int(abs(t) * float(u_max) / math.pi) + 1)
        nodes = mpmath.linspace(0, u_max, pieces + 1)
        value = mpmath.quad(lambda u: mpmath.exp(-x_mp * mpmath.cosh(u)) * mpmath.cos(t_mp * u), nodes)
        return value * mpmath.exp(mpmath.pi * abs(t_mp) / 2)


def _check_args(x: float) -> None:
    if not (x > 0 and math.isfinite(x)):
        raise ValidationError("Bessel argument must be positive", field="x", value=x)


def bessel_k_imag_scaled(
    t: float,
    x: float,
    prec: Optional[Precision] = None,
    method: str = "auto",
    certify: bool = False,
) -> float:
    """
    e^{pi|t|/2} K_{it}(x) for real t and x > 0.

    Args:
        t: Real order parameter
        x: Positive argument
        prec: Precision; defaults from settings
        method: "auto", "series" or "quadrature"
        certify: Compare both paths when x lies in the overlap range

    Raises:
        ValidationError: if x <= 0 or the method is unknown
        PrecisionError: if the two paths disagree beyond tolerance
    """
    _check_args(x)
    prec = prec or Precision.default()
    digits = prec.working_digits
    if method == "auto":
        method = "series" if x <= SERIES_MAX_X else "quadrature"
    if method == "series":
        value = _series(t, x, digits)
    elif method == "quadrature":
        value = _quadrature(t, x, digits)
    else:
        raise ValidationError(f"Unknown Bessel method '{method}'", field="method", value=method)

    if certify and CERTIFY_RANGE[0] <= x <= CERTIFY_RANGE[1]:
        other = _quadrature(t, x, digits) if method == "series" else _series(t, x, digits)
        diff = abs(value - other)
        if diff > 10 * prec.target_rel_tol * abs(value) + mpmath.mpf(10) ** (-digits):
            logger.error(
                "Bessel paths disagree",
                event="bessel_precision_failure",
                t=t,
                x=x,
                series=mpmath.nstr(value, 20),
                quadrature=mpmath.nstr(other, 20),
            )
            raise PrecisionError(
                f"K_it(x) paths disagree at t={t}, x={x}",
                operation="bessel_k_imag",
                values={"primary": value, "secondary": other, "difference": diff},
            )
    return float(value)


def bessel_k_imag(
    t: float,
    x: float,
    prec: Optional[Precision] = None,
    method: str = "auto",
    certify: bool = False,
) -> float:
    """K_{it}(x) for real t and x > 0 (a real number)."""
    scaled = bessel_k_imag_scaled(t, x, prec, method, certify)
    return scaled * math.exp(-math.pi * abs(t) / 2)


def bessel_k_imag_scaled_many(t_values: Iterable[float], x: float, prec: Optional[Precision] = None) -> np.ndarray:
    """
    Scaled K_{it}(x) on a t-grid at fixed x.

    K is even in t, so each |t| is evaluated once per call.
    """
    t_arr = np.asarray(list(t_values), dtype=float)
    table: dict[float, float] = {}
    out = np.empty_like(t_arr)
    for i, t in enumerate(np.abs(t_arr)):
        key = float(t)
        if key not in table:
            table[key] = bessel_k_imag_scaled(key, x, prec)
        out[i] = table[key]
    return out
