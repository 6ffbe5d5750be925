"""
Spherical function Xi_{1/2+it}(u) = 2F1(s, 1-s; 1; -u) = P_{-1/2+it}(2u+1).

Series path: sum_n prod_{k<n}((k+1/2)^2 + t^2) / (n!)^2 (-u)^n in mpmath,
all terms real. Mehler path, with cosh(theta) = 1 + 2u and phi =
theta(1 - w^2) removing the endpoint singularity:

    Xi = (2 sqrt(2) theta / pi) int_0^1 cos(t theta (1 - w^2))
         / sqrt(theta sinh(theta (1 - w^2/2)) shc(theta w^2 / 2)) dw,

shc(y) = sinh(y)/y. The Mehler integrand is vectorised over t.
"""

import math
from typing import Optional

import mpmath
import numpy as np

from src.core.exceptions import ValidationError
from src.core.quadrature import integrate_refined

from .schemas import Precision

U_SWITCH = 0.5
# digits the alternating series may lose before the Mehler path is used
MAX_SERIES_CANCELLATION = 40.0
_MEHLER_CHUNK = 128

_LN10 = math.log(10.0)


def _shc(y: np.ndarray) -> np.ndarray:
    """sinh(y)/y, with the Taylor form near 0."""
    y = np.asarray(y, dtype=float)
    small = np.abs(y) < 1e-4
    safe = np.where(small, 1.0, y)
    return np.where(small, 1.0 + y * y / 6.0, np.sinh(safe) / safe)


def _check_u(u: float) -> None:
    if not (u >= 0 and math.isfinite(u)):
        raise ValidationError("u must be a nonnegative real", field="u", value=u)


def series_cancellation_digits(t: float, u: float) -> float:
    return 2.0 * abs(t) * math.sqrt(u) / _LN10


def xi_series(t: float, u: float, prec: Optional[Precision] = None) -> float:
    """Hypergeometric series; valid for u < 1."""
    _check_u(u)
    assert u < 1.0, "Xi series used outside its radius of convergence"
    prec = prec or Precision.default()
    dps = int(prec.working_digits + series_cancellation_digits(t, u) + 10)
    with mpmath.workdps(dps):
        u_mp = mpmath.mpf(u)
        t2 = mpmath.mpf(t) ** 2
        term = mpmath.mpf(1)
        total = mpmath.mpf(1)
        eps = mpmath.mpf(10) ** (-dps + 2)
        n = 0
        while True:
            factor = ((n + mpmath.mpf(1) / 2) ** 2 + t2) / (n + 1) ** 2
            term = -term * factor * u_mp
            total += term
            n += 1
            if factor * u_mp < 1 and abs(term) <= eps * max(abs(total), eps):
                break
        return float(total)


def xi_mehler_many(t_values, u: float, rel_tol: float = 1e-13, max_refinements: int = 12) -> np.ndarray:
    """Mehler integral for a whole t-grid at one u."""
    _check_u(u)
    t_arr = np.atleast_1d(np.asarray(t_values, dtype=float))
    if u == 0:
        return np.ones_like(t_arr)
    theta = math.acosh(1.0 + 2.0 * u)
    scale = 2.0 * math.sqrt(2.0) * theta / math.pi

    order = np.argsort(np.abs(t_arr), kind="stable")
    out = np.empty_like(t_arr)
    for start in range(0, len(order), _MEHLER_CHUNK):
        idx = order[start : start + _MEHLER_CHUNK]
        t_chunk = t_arr[idx]

        def integrand(w: np.ndarray, t_chunk=t_chunk) -> np.ndarray:
            w2 = w * w
            denom = np.sqrt(theta * np.sinh(theta * (1.0 - 0.5 * w2)) * _shc(0.5 * theta * w2))
            phase = np.outer(t_chunk, theta * (1.0 - w2))
            return scale * np.cos(phase) / denom

        panels = max(4, int(np.abs(t_chunk).max() * theta / math.pi) + 4)
        result = integrate_refined(
            integrand,
            0.0,
            1.0,
            rel_tol=rel_tol,
            abs_tol=rel_tol,
            panels=panels,
            order=16,
            max_refinements=max_refinements,
            operation="xi_mehler",
        )
        out[idx] = result.value
    return out


def xi_mehler(t: float, u: float) -> float:
    return float(xi_mehler_many([t], u)[0])


def use_series(t: float, u: float) -> bool:
    return u <= U_SWITCH and series_cancellation_digits(t, u) <= MAX_SERIES_CANCELLATION


def spherical_xi(
    t: Optional[float] = None,
    u: float = 0.0,
    prec: Optional[Precision] = None,
    s: Optional[complex] = None,
) -> float:
    """
    Xi_{1/2+it}(u) for real t, or for s = 1/2 + it on the critical line.

    Raises:
        ValidationError: if u < 0, or s is off the critical line
    """
    _check_u(u)
    if s is not None:
        s = complex(s)
        if abs(s.real - 0.5) > 1e-14:
            raise ValidationError("s must lie on the critical line", field="s", value=s)
        t = s.imag
    if t is None:
        raise ValidationError("Either t or s is required", field="t")
    if u == 0:
        return 1.0
    if use_series(t, u):
        return xi_series(t, u, prec)
    return xi_mehler(t, u)


def spherical_xi_many(t_values, u: float, prec: Optional[Precision] = None) -> np.ndarray:
    """Xi on a t-grid at one u: per-node series below the switch, vectorised Mehler otherwise."""
    _check_u(u)
    t_arr = np.atleast_1d(np.asarray(t_values, dtype=float))
    if u == 0:
        return np.ones_like(t_arr)
    out = np.empty_like(t_arr)
    series_mask = np.array([use_series(t, u) for t in t_arr], dtype=bool)
    for i in np.flatnonzero(series_mask):
        out[i] = xi_series(float(t_arr[i]), u, prec)
    if np.any(~series_mask):
        out[~series_mask] = xi_mehler_many(t_arr[~series_mask], u)
    return out
