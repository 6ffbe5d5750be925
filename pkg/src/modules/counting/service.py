"""
Service layer for counting module.

Enumerates R(l;g) in the archimedean regions, counts ordered pairs with
equal determinant (optionally inside a diamond window), computes
successive minima and checks the counting bounds over parameter grids.
"""

import hashlib
import math
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np
import sympy

from src.config import settings
from src.core import constants
from src.core.exceptions import ConvergenceError, EnumerationBudgetExceeded, ValidationError
from src.core.logging import get_logger, log_performance
from src.modules.algebra.schemas import GroupElement, LatticeSpec, as_fraction, is_squarefree
from src.modules.algebra.service import divisors, group_height, lattice_basis, trace_free_basis
from src.modules.harness.runner import run_grid
from src.modules.reporting import metrics

from .bounds import proposition_rhs
from .bounds import volume_heuristic as _volume_heuristic
from .enumeration import (
    LatticeFrame,
    build_frame,
    conjugated_invariants,
    det_keys,
    enumerate_frame,
    region_mask,
)
from .enums import Proposition, RegionKind, Sublattice
from .schemas import (
    CountGrid,
    CountReport,
    CountRow,
    EmptinessThreshold,
    LatticePointCount,
    PairConstraint,
    PairCountResult,
    Region,
    RegionEnumeration,
    ReportMetadata,
    SkippedPoint,
    SuccessiveMinima,
)

logger = get_logger("counting.service")

PROPOSITION_CONSTANTS = {
    Proposition.OMEGA: constants.OMEGA_PROP_CONSTANT,
    Proposition.PSI: constants.PSI_PROP_CONSTANT,
    Proposition.TRACE_FREE: constants.TRACE_FREE_PROP_CONSTANT,
    Proposition.HEART: constants.HEART_CONJECTURE_CONSTANT,
    Proposition.UPPER_TRIANGULAR: constants.UPPER_TRIANGULAR_CONSTANT,
}


def _frame(spec: LatticeSpec, sublattice: Sublattice) -> LatticeFrame:
    basis = lattice_basis(spec) if sublattice is Sublattice.FULL else trace_free_basis(spec)
    return build_frame(basis, spec.ell)


def enumerate_region(
    spec: LatticeSpec,
    region: Region,
    sublattice: Sublattice = Sublattice.FULL,
    budget: Optional[int] = None,
) -> RegionEnumeration:
    """
    Lattice elements gamma of R(l;g) with g^-1 gamma g in the region.

    Members are returned in original coordinates, sorted
    lexicographically by coefficient vector. For an irrational g the set
    includes members within the boundary slack; `slack_only` marks them.

    Raises:
        EnumerationBudgetExceeded: if the candidate count exceeds the budget
    """
    budget = budget or settings.enumeration.budget
    slack = settings.enumeration.boundary_slack
    frame = _frame(spec, sublattice)
    start = time.perf_counter()

    logger.debug(
        "Enumerating region",
        event="enumeration_start",
        spec=spec.descriptor,
        region=region.label,
        sublattice=sublattice.value,
    )
    try:
        candidates = enumerate_frame(frame, region, budget, slack)
    except EnumerationBudgetExceeded:
        metrics.record_budget_exceeded()
        logger.warning(
            "Enumeration budget exceeded",
            event="enumeration_budget_exceeded",
            spec=spec.descriptor,
            region=region.label,
            budget=budget,
        )
        raise

    inv = conjugated_invariants(frame, candidates, region.L)
    strict = region_mask(frame, inv, region)
    keep = strict if frame.exact else region_mask(frame, inv, region, slack)
    if region.exclude_zero and len(candidates):
        keep = keep & np.any(candidates != 0, axis=1)

    coefficients = candidates[keep]
    enumeration = RegionEnumeration(
        spec_descriptor=spec.descriptor,
        region=region,
        sublattice=sublattice,
        coefficients=coefficients,
        entries=coefficients @ frame.original,
        ell=spec.ell,
        det_key=det_keys(frame, coefficients),
        P=inv.P[keep],
        diamond=inv.diamond[keep],
        exact=frame.exact,
        scale=frame.scale,
        slack_only=(keep & ~strict)[keep],
    )

    duration = time.perf_counter() - start
    metrics.record_enumeration(sublattice.value, len(enumeration), duration)
    logger.debug(
        "Region enumerated",
        event="enumeration_complete",
        spec=spec.descriptor,
        region=region.label,
        candidates=len(candidates),
        members=len(enumeration),
        duration_ms=round(duration * 1000, 2),
    )
    return enumeration


def _count_ordered_pairs(det_key: np.ndarray, diamond: np.ndarray, window) -> int:
    """
    Ordered pairs with equal det_key and, if window is not None,
    |diamond_1 - diamond_2| <= window. Diagonal pairs are included.
    """
    if len(det_key) == 0:
        return 0
    if window is None:
        _, counts = np.unique(det_key, return_counts=True)
        return int(sum(int(c) * int(c) for c in counts))

    order = np.lexsort((diamond, det_key))
    keys = det_key[order]
    values = diamond[order]
    boundaries = np.flatnonzero(keys[1:] != keys[:-1]) + 1
    total = 0
    for segment in np.split(values, boundaries):
        upper = np.searchsorted(segment, segment + window, side="right")
        lower = np.searchsorted(segment, segment - window, side="left")
        total += int(np.sum(upper - lower))
    return total


def _diamond_window(enumeration: RegionEnumeration, heart: Optional[Fraction], slack: float):
    if heart is None:
        return None
    L4 = enumeration.region.L**4
    if enumeration.exact:
        return math.floor(4 * enumeration.scale**4 * heart * L4)
    return float(heart * L4) * (1.0 + slack) + 1e-12


def _pair_count(
    enumeration: RegionEnumeration, constraint: PairConstraint, subset: Optional[np.ndarray] = None
) -> PairCountResult:
    slack = settings.enumeration.boundary_slack
    rows = np.ones(len(enumeration), dtype=bool) if subset is None else subset
    strict_rows = rows & ~enumeration.slack_only

    strict_window = _diamond_window(enumeration, constraint.heart, 0.0)
    slack_window = _diamond_window(enumeration, constraint.heart, slack)

    count = _count_ordered_pairs(enumeration.det_key[strict_rows], enumeration.diamond[strict_rows], strict_window)
    if enumeration.exact:
        count_slack = count
    else:
        count_slack = _count_ordered_pairs(enumeration.det_key[rows], enumeration.diamond[rows], slack_window)
    return PairCountResult(
        count=count,
        count_slack=count_slack,
        members=int(np.count_nonzero(strict_rows)),
        det_classes=len(np.unique(enumeration.det_key[strict_rows])),
    )


@log_performance("counting.service")
def pair_count(
    spec: LatticeSpec,
    region: Region,
    constraint: PairConstraint = PairConstraint(),
    budget: Optional[int] = None,
) -> PairCountResult:
    """
    Ordered pairs (gamma_1, gamma_2) of members of the region with
    det(gamma_1) = det(gamma_2) and the optional diamond window.

    Use RegionKind.UNION for the union of the starred Omega and Psi regions.
    """
    enumeration = enumerate_region(spec, region, budget=budget)
    result = _pair_count(enumeration, constraint)
    logger.info(
        "Pair count finished",
        event="pair_count_complete",
        spec=spec.descriptor,
        region=region.label,
        heart=None if constraint.heart is None else str(constraint.heart),
        count=result.count,
        members=result.members,
    )
    return result


def pair_counts(
    spec: LatticeSpec,
    region: Region,
    hearts: Sequence[Optional[float]],
    budget: Optional[int] = None,
) -> list[PairCountResult]:
    """pair_count for several diamond windows sharing one enumeration."""
    enumeration = enumerate_region(spec, region, budget=budget)
    return [_pair_count(enumeration, PairConstraint(heart=heart)) for heart in hearts]


def upper_triangular_pair_count(
    spec: LatticeSpec,
    region: Region,
    heart=None,
    budget: Optional[int] = None,
) -> PairCountResult:
    """pair_count restricted to upper-triangular gamma_1, gamma_2 (m21 = 0)."""
    enumeration = enumerate_region(spec, region, budget=budget)
    upper = enumeration.entries[:, 2] == 0 if len(enumeration) else np.zeros(0, dtype=bool)
    return _pair_count(enumeration, PairConstraint(heart=heart), subset=upper)


def _gauge(frame: LatticeFrame, coefficients: np.ndarray, body: Region) -> np.ndarray:
    """Minkowski gauge max(sqrt(P'), sqrt(part'/delta)) / L of the body."""
    inv = conjugated_invariants(frame, coefficients)
    if frame.exact:
        S2 = float(frame.scale**2)
        P = inv.P.astype(float) / (2.0 * S2)
        part = (inv.rotation if body.kind is RegionKind.OMEGA else inv.dilation).astype(float) / (4.0 * S2)
    else:
        P = inv.P
        part = inv.rotation if body.kind is RegionKind.OMEGA else inv.dilation
    return np.sqrt(np.maximum(P, part / float(body.delta))) / float(body.L)


def successive_minima(
    spec: LatticeSpec,
    body: Region,
    sublattice: Sublattice = Sublattice.FULL,
    budget: Optional[int] = None,
) -> SuccessiveMinima:
    """
    lambda_1 <= ... <= lambda_n of the lattice with respect to the body.

    The scale s doubles until s*body holds n independent vectors; the
    minima are then read off by choosing vectors greedily in gauge order,
    keeping those that raise the exact rank.

    Raises:
        ValidationError: for the (non-convex) union region
        ConvergenceError: if the scale search exceeds its doubling limit
    """
    if body.kind is RegionKind.UNION:
        raise ValidationError("Successive minima need a convex body", field="kind", value=body.kind.value)
    frame = _frame(spec, sublattice)
    n = frame.rank
    gauge_basis = _gauge(frame, np.eye(n, dtype=np.int64), body)
    scale = float(np.min(gauge_basis))

    plain = Region(body.kind, body.delta, body.L, exclude_zero=True)
    for doubling in range(settings.enumeration.max_scale_doublings + 1):
        # enclose s*body; the exact gauge test below does the selection
        scaled = plain.scaled(as_fraction(scale) * body.L * Fraction(1000001, 1000000))
        points = enumerate_region(spec, scaled, sublattice, budget=budget).coefficients
        if len(points) and np.linalg.matrix_rank(points.astype(float)) == n:
            break
        scale *= 2.0
    else:
        raise ConvergenceError(
            "Successive minima scale search did not reach full rank",
            operation="successive_minima",
            iterations=settings.enumeration.max_scale_doublings,
        )

    gauges = _gauge(frame, points, body)
    order = np.argsort(gauges, kind="stable")
    chosen: list[list[int]] = []
    minima: list[float] = []
    for idx in order:
        candidate = [int(v) for v in points[idx]]
        if sympy.Matrix(chosen + [candidate]).rank() == len(chosen) + 1:
            chosen.append(candidate)
            minima.append(float(gauges[idx]))
            if len(chosen) == n:
                break

    logger.debug(
        "Successive minima computed",
        event="successive_minima_complete",
        spec=spec.descriptor,
        body=body.label,
        minima=minima,
        doublings=doubling,
    )
    return SuccessiveMinima(minima=tuple(minima), vectors=tuple(tuple(v) for v in chosen), scale_doublings=doubling)


def trace_free_count(spec: LatticeSpec, delta, L, budget: Optional[int] = None) -> int:
    """|R(l;g)^0 cap Psi(delta, L)|, zero included."""
    region = Region(RegionKind.PSI, delta, L, exclude_zero=False)
    return len(enumerate_region(spec, region, Sublattice.TRACE_FREE, budget=budget))


def lattice_point_count(
    spec: LatticeSpec, region: Region, sublattice: Sublattice = Sublattice.FULL
) -> LatticePointCount:
    """Compare |K cap Lambda| (zero included) with prod(1 + 1/lambda_i)."""
    body = Region(region.kind, region.delta, region.L, exclude_zero=False)
    count = len(enumerate_region(spec, body, sublattice))
    minima = successive_minima(spec, body, sublattice).minima
    product = float(np.prod([1.0 + 1.0 / lam for lam in minima]))
    return LatticePointCount(count=count, product=product, ratio=count / product, minima=minima)


def emptiness_threshold(spec: LatticeSpec, kind: RegionKind, delta) -> EmptinessThreshold:
    """
    Certified emptiness threshold: the starred region at (delta, L) is
    empty exactly for L < lambda_1 of the body at L = 1.
    """
    kinds = (RegionKind.OMEGA, RegionKind.PSI) if kind is RegionKind.UNION else (kind,)
    threshold = min(successive_minima(spec, Region(k, delta, 1)).minima[0] for k in kinds)
    H = group_height(spec.g, spec.N)
    delta_f = float(as_fraction(delta))
    scale = min(spec.ell**-0.5, 1.0 / (spec.ell * H * math.sqrt(delta_f)))
    return EmptinessThreshold(threshold=threshold, scale=scale, constant=threshold / scale, height=H)


def volume_heuristic(N: int, ell: int, delta: float, heart: float, L: float) -> float:
    """Volume term (l^5/N^2) min(heart, delta) delta L^6."""
    return _volume_heuristic(N, ell, delta, heart, L)


@dataclass(frozen=True)
class GridPoint:
    proposition: Proposition
    N: int
    ell: int
    delta: float
    L: float
    heart: Optional[float]
    g: str
    constant: float
    budget: Optional[int]


def ell_values(N: int, mode: str) -> list[int]:
    """Divisors l of N selected by the grid's ell mode."""
    if mode == "one":
        return [1]
    if mode == "N":
        return [N]
    if mode == "one-and-N":
        return sorted({1, N})
    return divisors(N)


def grid_points(
    proposition: Proposition, grid: CountGrid, constant: float, budget: Optional[int] = None
) -> list[GridPoint]:
    """Grid points in deterministic order; non-squarefree N are skipped."""
    hearts = grid.hearts if proposition is Proposition.HEART else [None]
    points = []
    for N in grid.N_values:
        if not is_squarefree(N):
            continue
        for ell in ell_values(N, grid.ell_mode):
            for g in grid.g_values:
                for delta in grid.deltas:
                    for L in grid.Ls:
                        for heart in hearts:
                            points.append(GridPoint(proposition, N, ell, delta, L, heart, g, constant, budget))
    return points


def evaluate_grid_point(point: GridPoint) -> Union[CountRow, SkippedPoint]:
    """Count and right-hand side at one grid point."""
    start = time.perf_counter()
    spec = LatticeSpec(N=point.N, ell=point.ell, g=GroupElement.parse(point.g))
    H = group_height(spec.g, spec.N)
    proposition = point.proposition
    try:
        if proposition is Proposition.TRACE_FREE:
            count = trace_free_count(spec, point.delta, point.L, budget=point.budget)
        elif proposition is Proposition.UPPER_TRIANGULAR:
            region = Region(RegionKind.UNION, point.delta, point.L)
            count = upper_triangular_pair_count(spec, region, budget=point.budget).count
        else:
            kind = {
                Proposition.OMEGA: RegionKind.OMEGA,
                Proposition.PSI: RegionKind.PSI,
                Proposition.HEART: RegionKind.UNION,
            }[proposition]
            region = Region(kind, point.delta, point.L)
            constraint = PairConstraint(heart=point.heart)
            count = _pair_count(enumerate_region(spec, region, budget=point.budget), constraint).count
    except EnumerationBudgetExceeded as e:
        metrics.record_grid_point(proposition.value, "skipped", time.perf_counter() - start)
        return SkippedPoint(
            N=point.N, ell=point.ell, delta=point.delta, L=point.L, heart=point.heart, g=point.g, reason=e.message
        )

    rhs = proposition_rhs(proposition, point.N, point.ell, point.delta, point.L, H, point.heart)
    ratio = count / rhs if rhs > 0 else 0.0
    volume = None
    if proposition is Proposition.HEART and point.heart is not None:
        volume = _volume_heuristic(point.N, point.ell, point.delta, point.heart, point.L)
    metrics.record_grid_point(proposition.value, "ok", time.perf_counter() - start)
    return CountRow(
        N=point.N,
        ell=point.ell,
        delta=point.delta,
        L=point.L,
        heart=point.heart,
        g=point.g,
        count=count,
        rhs=rhs,
        ratio=ratio,
        flag=ratio > point.constant,
        volume=volume,
    )


def config_hash(*parts: str) -> str:
    return hashlib.sha256("\n".join(parts).encode("utf-8")).hexdigest()


@log_performance("counting.service")
def verify_bound(
    proposition: Proposition,
    grid: CountGrid,
    constant: Optional[float] = None,
    budget: Optional[int] = None,
    max_workers: Optional[int] = None,
) -> CountReport:
    """
    Exact counts against the bound's right-hand side over a grid.

    Rows whose ratio exceeds the constant are flagged, never raised;
    points whose enumeration exceeds the budget are listed as skipped.
    """
    start = time.perf_counter()
    constant = PROPOSITION_CONSTANTS[proposition] if constant is None else constant
    points = grid_points(proposition, grid, constant, budget)
    logger.info(
        "Verifying bound",
        event="verify_bound_start",
        proposition=proposition.value,
        grid_points=len(points),
        constant=constant,
    )

    results = run_grid(evaluate_grid_point, points, max_workers=max_workers)
    rows = [r for r in results if isinstance(r, CountRow)]
    skipped = [r for r in results if isinstance(r, SkippedPoint)]

    report = CountReport(
        proposition=proposition,
        constant=constant,
        rows=rows,
        metadata=ReportMetadata(
            timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
            config_hash=config_hash(proposition.value, repr(constant), grid.model_dump_json(), str(budget)),
            runtime_s=round(time.perf_counter() - start, 3),
            constants_version=constants.CONSTANTS_VERSION,
            skipped=skipped,
        ),
    )
    logger.info(
        "Bound verification finished",
        event="verify_bound_complete",
        proposition=proposition.value,
        rows=len(rows),
        flagged=len(report.flagged),
        skipped=len(skipped),
        max_ratio=report.max_ratio,
    )
    return report


def fit_constant(report: CountReport) -> float:
    """Largest ratio of a sweep; the value a frozen constant is fitted to."""
    return report.max_ratio
