"""
Composite Gauss-Legendre quadrature with panel doubling.

All integrands are vectorised: they take a 1-D array of nodes and return
either an array of the same length or a 2-D array whose last axis runs
over the nodes (a batch of integrands sharing one grid).
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss

from src.core.exceptions import ConvergenceError

Integrand = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class QuadratureResult:
    """Value of a refined integral and the last refinement difference."""

    value: np.ndarray | float
    error_estimate: float
    panels: int
    refinements: int


@lru_cache(maxsize=16)
def _reference_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def panel_rule(a: float, b: float, panels: int, order: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """
    Nodes and weights of the composite rule on [a, b].

    Args:
        a: Lower limit
        b: Upper limit
        panels: Number of equal panels
        order: Gauss-Legendre order per panel

    Returns:
        (nodes, weights) as flat arrays
    """
    ref_x, ref_w = _reference_rule(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * ref_x[None, :]).ravel()
    weights = (half[:, None] * ref_w[None, :]).ravel()
    return nodes, weights


def integrate_panels(f: Integrand, a: float, b: float, panels: int, order: int = 16):
    """Apply the composite rule once."""
    nodes, weights = panel_rule(a, b, panels, order)
    return np.asarray(f(nodes)) @ weights


def integrate_refined(
    f: Integrand,
    a: float,
    b: float,
    rel_tol: float,
    abs_tol: float = 0.0,
    panels: int = 8,
    order: int = 16,
    max_refinements: int = 12,
    operation: str = "quadrature",
) -> QuadratureResult:
    """
    Integrate with panel doubling until two successive rules agree.

    Agreement is required component-wise for batched integrands:
    |I_2n - I_n| <= rel_tol*|I_2n| + abs_tol.

    Raises:
        ConvergenceError: if max_refinements doublings do not suffice
    """
    if b <= a:
        zero = np.zeros(np.shape(np.asarray(f(np.array([a]))))[:-1])
        return QuadratureResult(value=zero, error_estimate=0.0, panels=0, refinements=0)

    previous = integrate_panels(f, a, b, panels, order)
    for refinement in range(1, max_refinements + 1):
        panels *= 2
        current = integrate_panels(f, a, b, panels, order)
        diff = np.abs(current - previous)
        if np.all(diff <= rel_tol * np.abs(current) + abs_tol):
            return QuadratureResult(
                value=current,
                error_estimate=float(np.max(diff)),
                panels=panels,
                refinements=refinement,
            )
        previous = current

    raise ConvergenceError(
        f"{operation}: panel refinement did not converge on [{a}, {b}]",
        operation=operation,
        iterations=max_refinements,
    )
