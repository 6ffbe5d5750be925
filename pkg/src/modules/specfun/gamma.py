"""
Normalized upper incomplete gamma Q(s, x) for s = 1, 2, 3.
"""

import math

from src.core.exceptions import ValidationError


def incomplete_gamma_q(s: int, x: float) -> float:
    """
    Q(s, x) = Gamma(s)^-1 int_x^inf t^{s-1} e^{-t} dt, closed form
    e^{-x} sum_{k<s} x^k / k!.

    Raises:
        ValidationError: for s outside {1, 2, 3} or x < 0
    """
    if s not in (1, 2, 3):
        raise ValidationError(f"Unsupported order s={s}", field="s", value=s)
    if not (x >= 0):
        raise ValidationError("x must be nonnegative", field="x", value=x)
    if s == 1:
        poly = 1.0
    elif s == 2:
        poly = 1.0 + x
    else:
        poly = 1.0 + x + 0.5 * x * x
    return poly * math.exp(-x)
