"""
Fincke-Pohst enumeration and the integer frame for exact region tests.

A lattice basis is turned into two integer matrices: the original entries
scaled by l (for determinant keys and the upper-triangular filter) and
the conjugated entries scaled by S, the common denominator of g^-1 b_i g
(for P, b^2+c^2, a^2+d^2, tau and diamond). Region inequalities are then
compared as integers against floors of exact rational thresholds.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from src.core.exceptions import EnumerationBudgetExceeded, ValidationError
from src.core.logging import get_logger
from src.modules.algebra.schemas import LatticeBasis

from .enums import RegionKind
from .schemas import Region

logger = get_logger("counting.enumeration")

# int64 headroom for products of scaled invariants
_INT64_SAFE = 2**62


@dataclass(frozen=True)
class LatticeFrame:
    """Integer model of a basis of R(l;g) or of its trace-free part."""

    ell: int
    original: np.ndarray
    conjugated: np.ndarray
    scale: int
    exact: bool
    gram: np.ndarray

    @property
    def rank(self) -> int:
        return self.original.shape[0]


def build_frame(basis: LatticeBasis, ell: int) -> LatticeFrame:
    original = np.array(
        [[int(x * ell) for x in v.entries] for v in basis.vectors],
        dtype=np.int64,
    )
    if basis.conjugated_exact is not None:
        scale = math.lcm(*(x.denominator for m in basis.conjugated_exact for x in m.entries))
        conjugated = np.array(
            [[int(x * scale) for x in m.entries] for m in basis.conjugated_exact],
            dtype=np.int64,
        )
        exact = True
    else:
        scale = 1
        conjugated = np.array(basis.conjugated, dtype=float)
        exact = False
    return LatticeFrame(ell=ell, original=original, conjugated=conjugated, scale=scale, exact=exact, gram=basis.gram)


def quadratic_forms(frame: LatticeFrame) -> dict[str, np.ndarray]:
    """Gram matrices of P, b^2+c^2 and a^2+d^2 in coefficient space."""
    C = np.asarray(frame.conjugated, dtype=float) / frame.scale
    u_rot, v_rot = C[:, 1] + C[:, 2], C[:, 0] - C[:, 3]
    u_dil, v_dil = C[:, 1] - C[:, 2], C[:, 0] + C[:, 3]
    return {
        "P": 0.5 * C @ C.T,
        "rotation": 0.25 * (np.outer(u_rot, u_rot) + np.outer(v_rot, v_rot)),
        "dilation": 0.25 * (np.outer(u_dil, u_dil) + np.outer(v_dil, v_dil)),
    }


def enclosing_ellipsoid(
    forms: dict[str, np.ndarray], kind: RegionKind, delta: float, L: float, slack: float
) -> tuple[np.ndarray, float]:
    """
    Ellipsoid P + lam*part <= (1 + lam*delta) L^2 containing the region.

    lam = (1 - 2 delta)/delta minimises the ellipsoid volume for
    delta < 1/2; for larger delta the norm ball is used.
    """
    if kind is RegionKind.UNION:
        raise ValidationError("The union region has no single enclosing ellipsoid", field="kind")
    part = forms["rotation"] if kind is RegionKind.OMEGA else forms["dilation"]
    lam = (1.0 - 2.0 * delta) / delta if delta < 0.5 else 0.0
    gram = forms["P"] + lam * part
    radius_sq = (1.0 + lam * delta) * L * L * (1.0 + slack) + 1e-12
    return gram, radius_sq


def fincke_pohst(gram: np.ndarray, radius_sq: float, budget: int) -> np.ndarray:
    """
    All integer vectors k with k^T G k <= radius_sq, in lexicographic order.

    Depth-first interval search on the Cholesky form
    q(k) = sum_i q_ii (k_i + sum_{j>i} mu_ij k_j)^2, with the innermost
    coordinate emitted as a whole interval.

    Raises:
        EnumerationBudgetExceeded: if more than `budget` leaves would be
            produced; the search never truncates silently
        ValidationError: if the Gram matrix is not positive definite
    """
    gram = np.asarray(gram, dtype=float)
    n = gram.shape[0]
    try:
        R = np.linalg.cholesky(gram).T
    except np.linalg.LinAlgError as e:
        raise ValidationError("Gram matrix is not positive definite", field="gram") from e

    diag = np.diag(R)
    q = diag**2
    mu = R / diag[:, None]
    x = np.zeros(n, dtype=np.int64)
    blocks: list[np.ndarray] = []
    total = 0

    def descend(i: int, remaining: float) -> None:
        nonlocal total
        center = -float(mu[i, i + 1 :] @ x[i + 1 :]) if i + 1 < n else 0.0
        half = math.sqrt(max(remaining, 0.0) / q[i])
        lo, hi = math.ceil(center - half), math.floor(center + half)
        if lo > hi:
            return
        if i == 0:
            count = hi - lo + 1
            total += count
            if total > budget:
                raise EnumerationBudgetExceeded(
                    f"Fincke-Pohst enumeration exceeds budget of {budget} points",
                    budget=budget,
                    candidates=total,
                )
            block = np.empty((count, n), dtype=np.int64)
            block[:, 0] = np.arange(lo, hi + 1)
            block[:, 1:] = x[1:]
            blocks.append(block)
            return
        for k in range(lo, hi + 1):
            x[i] = k
            descend(i - 1, remaining - q[i] * (k - center) ** 2)
        x[i] = 0

    descend(n - 1, radius_sq)

    if not blocks:
        return np.zeros((0, n), dtype=np.int64)
    points = np.concatenate(blocks)
    order = np.lexsort(points.T[::-1])
    return points[order]


def enumerate_frame(frame: LatticeFrame, region: Region, budget: int, slack: float) -> np.ndarray:
    """Candidate coefficient vectors covering the region (a superset)."""
    forms = quadratic_forms(frame)
    delta, L = float(region.delta), float(region.L)
    if region.kind is RegionKind.UNION:
        parts = [
            fincke_pohst(*enclosing_ellipsoid(forms, kind, delta, L, slack), budget)
            for kind in (RegionKind.OMEGA, RegionKind.PSI)
        ]
        merged = np.concatenate(parts)
        if len(merged) == 0:
            return merged
        # np.unique along axis 0 sorts lexicographically
        return np.unique(merged, axis=0)
    return fincke_pohst(*enclosing_ellipsoid(forms, region.kind, delta, L, slack), budget)


@dataclass(frozen=True)
class ConjugatedInvariants:
    """
    Conjugated invariants of a batch of lattice points.

    Exact mode: P = 2S^2 P', rotation = 4S^2(b'^2+c'^2),
    dilation = 4S^2(a'^2+d'^2), tau = S^2 tau', diamond = 4S^4 diamond'.
    Float mode: the unscaled values.
    """

    P: np.ndarray
    rotation: np.ndarray
    dilation: np.ndarray
    tau: np.ndarray
    diamond: np.ndarray


def needs_object_arithmetic(scale: int, L) -> bool:
    """
    True when squared invariants of candidates at radius L may overflow int64.

    Candidates come from the enclosing ellipsoid, where P' reaches 2L^2,
    so the scaled P and rotation/dilation parts stay below 4S^2L^2.
    """
    bound = 4 * scale**2 * float(L) ** 2 * 1.01 + 16
    return 4 * bound * bound > _INT64_SAFE


def conjugated_invariants(
    frame: LatticeFrame, coefficients: np.ndarray, L: Optional[Fraction] = None
) -> ConjugatedInvariants:
    if frame.exact:
        A = coefficients @ frame.conjugated
        if L is not None and needs_object_arithmetic(frame.scale, L):
            A = A.astype(object)
        p = (A * A).sum(axis=1)
        rotation = (A[:, 1] + A[:, 2]) ** 2 + (A[:, 0] - A[:, 3]) ** 2
        dilation = (A[:, 1] - A[:, 2]) ** 2 + (A[:, 0] + A[:, 3]) ** 2
        tau = A[:, 0] * A[:, 3] - A[:, 1] * A[:, 2]
        diamond = p * p - 4 * tau * tau
        return ConjugatedInvariants(P=p, rotation=rotation, dilation=dilation, tau=tau, diamond=diamond)

    A = coefficients.astype(float) @ frame.conjugated
    P = 0.5 * (A * A).sum(axis=1)
    rotation = 0.25 * ((A[:, 1] + A[:, 2]) ** 2 + (A[:, 0] - A[:, 3]) ** 2)
    dilation = 0.25 * ((A[:, 1] - A[:, 2]) ** 2 + (A[:, 0] + A[:, 3]) ** 2)
    tau = A[:, 0] * A[:, 3] - A[:, 1] * A[:, 2]
    return ConjugatedInvariants(P=P, rotation=rotation, dilation=dilation, tau=tau, diamond=P * P - tau * tau)


def region_mask(
    frame: LatticeFrame, inv: ConjugatedInvariants, region: Region, slack: float = 0.0
) -> np.ndarray:
    """
    Exact (integer) membership in exact mode; float membership with
    relative slack otherwise.
    """
    L2 = region.L * region.L
    if frame.exact:
        S2 = frame.scale**2
        p_max = math.floor(2 * S2 * L2)
        part_max = math.floor(4 * S2 * region.delta * L2)
    else:
        factor = 1.0 + slack
        p_max = float(L2) * factor
        part_max = float(region.delta * L2) * factor

    in_ball = inv.P <= p_max
    if region.kind is RegionKind.OMEGA:
        mask = in_ball & (inv.rotation <= part_max)
    elif region.kind is RegionKind.PSI:
        mask = in_ball & (inv.dilation <= part_max)
    else:
        mask = in_ball & ((inv.rotation <= part_max) | (inv.dilation <= part_max))
    return np.asarray(mask, dtype=bool)


def det_keys(frame: LatticeFrame, coefficients: np.ndarray) -> np.ndarray:
    """l * det(gamma), an exact integer for gamma in R(l)."""
    E = coefficients @ frame.original
    return (E[:, 0] * E[:, 3] - E[:, 1] * E[:, 2]) // frame.ell
