"""
Service layer for the theta module.

theta_{g,l}(z) = y sum_{gamma in R(l;g)} Phi(y^1/2 g^-1 gamma g) e(x det gamma),
truncated to P(y^1/2 g^-1 gamma g) <= pCut with pCut doubled until the
value settles. Phi values are memoised per call on exact lattice
invariants, so a doubling only evaluates the new shell.
"""

import math
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from fractions import Fraction
from typing import Optional, Union

import numpy as np

from src.config import settings
from src.core import constants
from src.core.exceptions import ConvergenceError, EnumerationBudgetExceeded, ValidationError
from src.core.logging import get_logger, log_performance
from src.modules.algebra.schemas import GroupElement, HalfPlanePoint, LatticeSpec, is_squarefree
from src.modules.algebra.service import divisors
from src.modules.counting.enums import RegionKind
from src.modules.counting.schemas import Region, ReportMetadata, SkippedPoint
from src.modules.counting.service import config_hash, enumerate_region, pair_counts
from src.modules.harness.runner import run_grid
from src.modules.specfun.schemas import Precision
from src.modules.testfn.service import PhiEvaluator

from .schemas import BoundGrid, BoundReport, BoundRow, DetProfile, ThetaConfig, ThetaValue

logger = get_logger("theta.service")

# decay exponent matching PHI_DECAY_CONSTANT
TAIL_DECAY_EXPONENT = 6
_CERTIFICATE_SHELLS = 64


@dataclass
class _Terms:
    """Truncated lattice sum data at one (y, pCut)."""

    phi: np.ndarray
    det_key: np.ndarray
    nonzero: np.ndarray


def _initial_cut(cfg: ThetaConfig) -> float:
    if cfg.p_cut is not None:
        return cfg.p_cut
    return math.log(1e2 / cfg.tol) / (2.0 * math.pi * math.cos(cfg.window.alpha))


def _evaluator(cfg: ThetaConfig) -> PhiEvaluator:
    prec = Precision(
        target_rel_tol=max(1e-2 * cfg.tol, 1e-13),
        working_digits=settings.numerics.working_digits,
    )
    return PhiEvaluator(cfg.window, prec)


def _terms(cfg: ThetaConfig, y: float, p_cut: float, evaluator: PhiEvaluator) -> _Terms:
    """Phi(y^1/2 gamma') for every gamma with y P(gamma') <= p_cut, zero included."""
    region = Region(RegionKind.OMEGA, 1, math.sqrt(p_cut / y), exclude_zero=False)
    enumeration = enumerate_region(cfg.spec, region, budget=cfg.budget)
    P = enumeration.conjugated_norms()
    det_key = enumeration.det_key
    tau = det_key.astype(float) / cfg.spec.ell
    raw_P = enumeration.P.tolist() if enumeration.exact else P.tolist()
    keys = list(zip(raw_P, det_key.tolist()))
    phi = evaluator.evaluate(y * P, y * tau, keys)
    nonzero = np.any(enumeration.coefficients != 0, axis=1)
    return _Terms(phi=phi, det_key=det_key, nonzero=nonzero)


def truncation_certificate(cfg: ThetaConfig, y: float, p_cut: float) -> float:
    """
    A-priori bound on y * sum over P > p_cut of |Phi|.

    Dyadic shells [2^k p_cut, 2^(k+1) p_cut) contribute at most
    C_Phi (1 + 2^k p_cut)^-6 times the Omega count bound
    C_shell (2 pi^2 l^2 L^4 / N + 1), L^2 = 2^(k+1) p_cut / y.
    """
    ell, N = cfg.spec.ell, cfg.spec.N
    total = 0.0
    for k in range(_CERTIFICATE_SHELLS):
        lower = 2.0**k * p_cut
        L2 = 2.0 * lower / y
        shell = constants.SHELL_COUNT_CONSTANT * (2.0 * math.pi**2 * ell * ell * L2 * L2 / N + 1.0)
        total += constants.PHI_DECAY_CONSTANT * (1.0 + lower) ** -TAIL_DECAY_EXPONENT * shell
    return y * total


def _theta_sum(cfg: ThetaConfig, z: HalfPlanePoint, p_cut: float, evaluator: PhiEvaluator):
    y, x = float(z.y), float(z.x)
    terms = _terms(cfg, y, p_cut, evaluator)
    det = terms.det_key.astype(float) / cfg.spec.ell
    phase = np.exp(2j * math.pi * np.mod(x * det, 1.0))
    weighted = terms.phi * phase
    null = terms.det_key == 0
    value = complex(y * weighted.sum())
    null_part = complex(y * weighted[null].sum())
    return value, null_part, len(weighted)


@log_performance("theta.service")
def theta_eval(cfg: ThetaConfig, z: HalfPlanePoint) -> ThetaValue:
    """
    Truncated theta kernel at z.

    Raises:
        ConvergenceError: if max_doublings doublings of pCut do not settle
    """
    evaluator = _evaluator(cfg)
    p_cut = _initial_cut(cfg)
    value, null_part, terms = _theta_sum(cfg, z, p_cut, evaluator)
    for doubling in range(1, cfg.max_doublings + 1):
        p_cut *= 2.0
        new_value, null_part, terms = _theta_sum(cfg, z, p_cut, evaluator)
        change = abs(new_value - value)
        value = new_value
        if change <= cfg.tol * max(1.0, abs(value)):
            result = ThetaValue(
                value=value,
                p_cut=p_cut,
                terms=terms,
                null_contribution=null_part,
                certificate=truncation_certificate(cfg, float(z.y), p_cut),
                converged=True,
                doublings=doubling,
            )
            logger.info(
                "Theta evaluated",
                event="theta_eval_complete",
                spec=cfg.spec.descriptor,
                window=cfg.window.descriptor(),
                z=str(z.z),
                value=str(value),
                p_cut=p_cut,
                terms=terms,
                phi_evaluations=len(evaluator),
                null_locus_evaluations=evaluator.null_locus_evaluations,
            )
            return result
    logger.error(
        "Theta truncation did not converge",
        event="theta_eval_failed",
        spec=cfg.spec.descriptor,
        z=str(z.z),
        p_cut=p_cut,
    )
    raise ConvergenceError(
        f"theta truncation did not settle up to pCut={p_cut:g}",
        operation="theta_eval",
        iterations=cfg.max_doublings,
    )


def _profile(cfg: ThetaConfig, y: float, p_cut: float, evaluator: PhiEvaluator) -> tuple[dict[Fraction, float], int]:
    terms = _terms(cfg, y, p_cut, evaluator)
    keys = terms.det_key[terms.nonzero]
    phi = terms.phi[terms.nonzero]
    if len(keys) == 0:
        return {}, 0
    unique, inverse = np.unique(keys, return_inverse=True)
    sums = np.bincount(inverse.ravel(), weights=phi, minlength=len(unique))
    ell = cfg.spec.ell
    return {Fraction(int(k), ell): float(s) for k, s in zip(unique, sums)}, len(phi)


def theta_det_profile(cfg: ThetaConfig, y: float) -> DetProfile:
    """
    Determinant class sums n -> sum_{det gamma = n, gamma != 0} Phi(y^1/2 gamma).

    Raises:
        ValidationError: if y <= 0
        ConvergenceError: if the truncation does not settle
    """
    if not y > 0:
        raise ValidationError("y must be positive", field="y", value=y)
    evaluator = _evaluator(cfg)
    p_cut = _initial_cut(cfg)
    sums, terms = _profile(cfg, y, p_cut, evaluator)
    for _ in range(cfg.max_doublings):
        p_cut *= 2.0
        new_sums, terms = _profile(cfg, y, p_cut, evaluator)
        change = max((abs(v - sums.get(k, 0.0)) for k, v in new_sums.items()), default=0.0)
        scale = max((abs(v) for v in new_sums.values()), default=0.0)
        sums = new_sums
        if change <= cfg.tol * max(1.0, scale):
            return DetProfile(sums=sums, p_cut=p_cut, terms=terms)
    raise ConvergenceError(
        f"determinant profile did not settle up to pCut={p_cut:g}",
        operation="theta_det_profile",
        iterations=cfg.max_doublings,
    )


def l2_integrand(cfg: ThetaConfig, y: float) -> float:
    """sum_n |sum_{det gamma = n, gamma != 0} Phi(y^1/2 gamma)|^2."""
    value = theta_det_profile(cfg, y).l2
    logger.debug("L2 integrand evaluated", event="l2_integrand_complete", y=y, value=value)
    return value


# ==================== geometric fourth-moment bound ====================


@dataclass(frozen=True)
class _BoundPoint:
    N: int
    ell: int
    L: float
    delta: float
    hearts: tuple[float, ...]
    g1: GroupElement
    g2: GroupElement
    budget: Optional[int]


def _dyadic_down(top: float, bottom: float) -> list[float]:
    values = [top]
    while values[-1] / 2.0 >= bottom:
        values.append(values[-1] / 2.0)
    return values


def bound_points(
    g1: GroupElement, g2: GroupElement, N: int, T: float, grid: BoundGrid, budget: Optional[int] = None
) -> list[_BoundPoint]:
    """Grid points in deterministic order."""
    ells = grid.ell_values or divisors(N)
    delta_min = max(T**-2, grid.delta_min or 0.0)
    points = []
    for ell in ells:
        if N % ell:
            raise ValidationError(f"l={ell} does not divide N={N}", field="ell", value=ell)
        # dyadic from the emptiness scale l^-1/2
        L_bottom = ell**-0.5
        L_top = max(L_bottom, math.sqrt(N * T) / ell)
        if grid.L_max is not None:
            L_top = min(L_top, grid.L_max)
        Ls = [L_bottom]
        while Ls[-1] * 2.0 <= L_top:
            Ls.append(Ls[-1] * 2.0)
        for L in Ls:
            for delta in _dyadic_down(1.0, delta_min):
                hearts = tuple(_dyadic_down(delta, math.sqrt(delta) / T))
                points.append(_BoundPoint(N, ell, L, delta, hearts, g1, g2, budget))
    return points


def evaluate_bound_point(point: _BoundPoint) -> Union[list[BoundRow], SkippedPoint]:
    region = Region(RegionKind.UNION, point.delta, point.L)
    try:
        counts = [
            pair_counts(LatticeSpec(N=point.N, ell=point.ell, g=g), region, point.hearts, budget=point.budget)
            for g in (point.g1, point.g2)
        ]
    except EnumerationBudgetExceeded as e:
        return SkippedPoint(
            N=point.N, ell=point.ell, delta=point.delta, L=point.L, heart=None, g=point.g1.label, reason=e.message
        )
    rows = []
    for heart, first, second in zip(point.hearts, counts[0], counts[1]):
        norm = point.ell * point.L**2 * heart
        values = (first.count / norm, second.count / norm)
        rows.append(
            BoundRow(
                N=point.N,
                ell=point.ell,
                L=point.L,
                delta=point.delta,
                heart=heart,
                count_g1=first.count,
                count_g2=second.count,
                value=max(values),
                argmax="g1" if values[0] >= values[1] else "g2",
            )
        )
    return rows


@log_performance("theta.service")
def geometric_fourth_moment_bound(
    g1: GroupElement,
    g2: GroupElement,
    N: int,
    T: float,
    grid: Optional[BoundGrid] = None,
    budget: Optional[int] = None,
    max_workers: Optional[int] = None,
) -> BoundReport:
    """
    max over g in {g1, g2} of (l L^2 heart)^-1 times the number of pairs
    in R(l;g) from the union of the starred regions with equal
    determinants and |diamond_1 - diamond_2| <= heart L^4.

    Raises:
        ValidationError: if T < 3 or N is not squarefree
    """
    if not T >= 3:
        raise ValidationError("The bound needs T >= 3", field="T", value=T)
    if not is_squarefree(N):
        raise ValidationError(f"N={N} is not squarefree", field="N", value=N)
    grid = grid or BoundGrid()
    start = time.perf_counter()
    points = bound_points(g1, g2, N, T, grid, budget)
    logger.info("Scanning fourth-moment bound", event="bound_start", N=N, T=T, grid_points=len(points))

    rows: list[BoundRow] = []
    skipped: list[SkippedPoint] = []
    for result in run_grid(evaluate_bound_point, points, max_workers=max_workers):
        if isinstance(result, SkippedPoint):
            skipped.append(result)
        else:
            rows.extend(result)

    report = BoundReport(
        N=N,
        T=T,
        g1=g1.label,
        g2=g2.label,
        rows=rows,
        maximum=max((row.value for row in rows), default=0.0),
        metadata=ReportMetadata(
            timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
            config_hash=config_hash("bound", str(N), repr(T), g1.label, g2.label, grid.model_dump_json(), str(budget)),
            runtime_s=round(time.perf_counter() - start, 3),
            constants_version=constants.CONSTANTS_VERSION,
            skipped=skipped,
        ),
    )
    logger.info(
        "Fourth-moment bound scanned",
        event="bound_complete",
        N=N,
        T=T,
        rows=len(rows),
        skipped=len(skipped),
        maximum=report.maximum,
    )
    return report
