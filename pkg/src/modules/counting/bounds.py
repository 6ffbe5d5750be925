"""
Right-hand sides of the counting statements with eps = 0 and d_B = 1.

H is the height H(g.i) at level N. All formulas are the split-case
versions, so the terms involving H are kept.
"""

import math

from .enums import Proposition


def omega_rhs(N: int, ell: int, delta: float, L: float, H: float) -> float:
    rl = math.sqrt(ell)
    sd = math.sqrt(delta)
    left = 1 + rl * H * sd + rl * H * delta * L + ell**2 / N * delta * L**2
    right = 1 + rl * H * sd + rl * H * sd * L + ell**2 / N * delta * L**2
    return ell * L**2 * left * right


def psi_rhs(N: int, ell: int, delta: float, L: float, H: float) -> float:
    sd = math.sqrt(delta)
    inner = (
        1
        + math.sqrt(ell) * H * sd
        + ell / math.sqrt(N) * L
        + ell * H * sd * L
        + ell**2 / N * sd * L**2
    )
    return ell * L**2 * inner**2


def trace_free_rhs(N: int, ell: int, delta: float, L: float, H: float) -> float:
    sd = math.sqrt(delta)
    return (
        1
        + (math.sqrt(ell) + ell * H * sd) * L
        + (ell**1.5 / math.sqrt(N) + ell**1.5 * H * sd) * L**2
        + ell**2 / N * sd * L**3
    )


def heart_rhs(N: int, ell: int, delta: float, L: float, H: float, heart: float) -> float:
    sd = math.sqrt(delta)
    H2 = H * H
    return ell * L**2 * (
        1
        + ell**2 / N * sd * L**2
        + ell**4 / N**2 * min(heart, delta) * L**4
        + ell * H2
        + ell**1.5 * H2 * delta**0.25 * L
        + ell**2 * H2 * sd * L**2
    )


def upper_triangular_rhs(N: int, ell: int, delta: float, L: float, H: float) -> float:
    H2 = H * H
    return ell * L**2 * (1 + ell * H2 * delta + ell * H2 * delta * L + ell * H2 * delta**1.5 * L**2)


def volume_heuristic(N: int, ell: int, delta: float, heart: float, L: float) -> float:
    """(l^5/N^2) min(heart, delta) delta L^6, the expected volume term."""
    return ell**5 / N**2 * min(heart, delta) * delta * L**6


def proposition_rhs(
    proposition: Proposition, N: int, ell: int, delta: float, L: float, H: float, heart: float | None = None
) -> float:
    if proposition is Proposition.OMEGA:
        return omega_rhs(N, ell, delta, L, H)
    if proposition is Proposition.PSI:
        return psi_rhs(N, ell, delta, L, H)
    if proposition is Proposition.TRACE_FREE:
        return trace_free_rhs(N, ell, delta, L, H)
    if proposition is Proposition.HEART:
        return heart_rhs(N, ell, delta, L, H, 0.0 if heart is None else heart)
    return upper_triangular_rhs(N, ell, delta, L, H)
