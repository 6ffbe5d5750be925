import math
from fractions import Fraction

import pytest

from src.core import constants
from src.core.exceptions import ValidationError
from src.modules.algebra.schemas import GroupElement, LatticeSpec
from src.modules.counting.bounds import (
    heart_rhs,
    omega_rhs,
    proposition_rhs,
    psi_rhs,
    trace_free_rhs,
    upper_triangular_rhs,
    volume_heuristic,
)
from src.modules.counting.enumeration import needs_object_arithmetic
from src.modules.counting.enums import Proposition, RegionKind, Sublattice
from src.modules.counting.schemas import CountGrid, PairConstraint, Region
from src.modules.counting.service import (
    ell_values,
    emptiness_threshold,
    enumerate_region,
    fit_constant,
    grid_points,
    lattice_point_count,
    pair_count,
    pair_counts,
    successive_minima,
    trace_free_count,
    upper_triangular_pair_count,
    verify_bound,
)

# ---------- golden counts in M2(Z) ----------


def test_region_members(unit_spec, unit_omega):
    enumeration = enumerate_region(unit_spec, unit_omega)
    assert len(enumeration) == 32
    assert enumeration.det_classes() == {Fraction(-1): 4, Fraction(0): 24, Fraction(1): 4}
    assert all(not m.is_zero() and m.norm <= 1 for m in enumeration.matrices())


def test_region_with_zero(unit_spec):
    assert len(enumerate_region(unit_spec, Region(RegionKind.OMEGA, 1, 1, exclude_zero=False))) == 33


def test_union_region_at_full_width(unit_spec):
    assert len(enumerate_region(unit_spec, Region(RegionKind.UNION, 1, 1))) == 32


def test_pair_counts(unit_spec, unit_omega):
    assert pair_count(unit_spec, unit_omega).count == 608
    assert pair_count(unit_spec, unit_omega, PairConstraint(heart=0)).count == 352
    assert [r.count for r in pair_counts(unit_spec, unit_omega, [None, 0])] == [608, 352]


def test_upper_triangular_pairs(unit_spec, unit_omega):
    result = upper_triangular_pair_count(unit_spec, unit_omega)
    assert result.count == 204
    assert result.members == 18


def test_upper_triangular_sweep_counts_the_union(unit_spec):
    # diag(1, -1) lies in Psi*(1/4, 1) but not in Omega*(1/4, 1)
    grid = CountGrid(N_values=[1], deltas=[0.25])
    (row,) = verify_bound(Proposition.UPPER_TRIANGULAR, grid, max_workers=1).rows
    union = upper_triangular_pair_count(unit_spec, Region(RegionKind.UNION, 0.25, 1))
    omega = upper_triangular_pair_count(unit_spec, Region(RegionKind.OMEGA, 0.25, 1))
    assert row.count == union.count
    assert union.count > omega.count


def test_trace_free_count(unit_spec):
    assert trace_free_count(unit_spec, 1, 1) == 11


def test_counts_grow_with_L(unit_spec):
    counts = [len(enumerate_region(unit_spec, Region(RegionKind.PSI, 1, L))) for L in (1, 2, 3)]
    assert counts == sorted(counts)
    assert counts[0] < counts[-1]


def test_rational_conjugator_stays_exact():
    spec = LatticeSpec(N=1, g=GroupElement.parse("diag:4"))
    enumeration = enumerate_region(spec, Region(RegionKind.OMEGA, 1, 2))
    assert enumeration.exact
    assert len(enumeration) > 0
    assert not enumeration.slack_only.any()


def test_irrational_conjugator_enumerates():
    spec = LatticeSpec(N=2, g=GroupElement.parse("diag:2"))
    enumeration = enumerate_region(spec, Region(RegionKind.OMEGA, 1, 2))
    assert not enumeration.exact
    assert (enumeration.conjugated_norms() <= 4 * (1 + 1e-9)).all()


# ---------- regions ----------


@pytest.mark.parametrize("delta, L", [(0, 1), (2, 1), (1, 0), (1, -1)])
def test_region_validation(delta, L):
    with pytest.raises(ValidationError):
        Region(RegionKind.OMEGA, delta, L)


def test_region_contains():
    region = Region(RegionKind.OMEGA, Fraction(1, 4), 2)
    assert region.contains(P=3, rotation=1, dilation=3)
    assert not region.contains(P=3, rotation=2, dilation=0)
    assert not region.contains(P=5, rotation=0, dilation=0)
    assert Region(RegionKind.UNION, Fraction(1, 4), 2).contains(P=3, rotation=2, dilation=0)


def test_negative_heart_rejected():
    with pytest.raises(ValidationError):
        PairConstraint(heart=-1)


# ---------- successive minima ----------


def test_successive_minima_of_m2z(unit_spec):
    result = successive_minima(unit_spec, Region(RegionKind.OMEGA, 1, 1))
    assert result.minima == pytest.approx((math.sqrt(0.5),) * 4)
    assert len(result.vectors) == 4


def test_minima_need_convex_body(unit_spec):
    with pytest.raises(ValidationError):
        successive_minima(unit_spec, Region(RegionKind.UNION, 1, 1))


def test_trace_free_minima_rank(unit_spec):
    result = successive_minima(unit_spec, Region(RegionKind.PSI, 1, 1), Sublattice.TRACE_FREE)
    assert len(result.minima) == 3
    assert list(result.minima) == sorted(result.minima)


def test_emptiness_threshold(unit_spec):
    threshold = emptiness_threshold(unit_spec, RegionKind.OMEGA, 1)
    assert threshold.threshold == pytest.approx(math.sqrt(0.5))
    assert threshold.height == pytest.approx(1.0)
    below = Region(RegionKind.OMEGA, 1, threshold.threshold * (1 - 1e-6))
    above = Region(RegionKind.OMEGA, 1, threshold.threshold * (1 + 1e-6))
    assert len(enumerate_region(unit_spec, below)) == 0
    assert len(enumerate_region(unit_spec, above)) > 0


@pytest.mark.parametrize("N, g", [(2, "I"), (3, "diag:4"), (6, "I")])
@pytest.mark.parametrize("kind", [RegionKind.OMEGA, RegionKind.PSI])
def test_emptiness_threshold_is_sharp(N, g, kind):
    spec = LatticeSpec(N=N, g=GroupElement.parse(g))
    threshold = emptiness_threshold(spec, kind, 0.25).threshold
    assert len(enumerate_region(spec, Region(kind, 0.25, threshold * (1 - 1e-6)))) == 0
    assert len(enumerate_region(spec, Region(kind, 0.25, threshold * (1 + 1e-6)))) > 0


@pytest.mark.parametrize("N, ell, g", [(2, 2, "diag:4"), (3, 1, "diag:4"), (6, 6, "diag:4"), (5, 5, "I")])
@pytest.mark.parametrize("kind", [RegionKind.OMEGA, RegionKind.PSI])
@pytest.mark.parametrize("delta", [1.0, 0.0625])
def test_emptiness_threshold_respects_scale(N, ell, g, kind, delta):
    spec = LatticeSpec(N=N, ell=ell, g=GroupElement.parse(g))
    result = emptiness_threshold(spec, kind, delta)
    assert result.scale == pytest.approx(min(ell**-0.5, 1 / (ell * result.height * math.sqrt(delta))))
    assert result.threshold >= constants.EMPTINESS_THRESHOLD_CONSTANT * result.scale
    below = Region(kind, delta, constants.EMPTINESS_THRESHOLD_CONSTANT * result.scale)
    assert len(enumerate_region(spec, below)) == 0


def test_lattice_point_count(unit_spec):
    result = lattice_point_count(unit_spec, Region(RegionKind.OMEGA, 1, 1))
    assert result.count == 33
    assert result.product == pytest.approx((1 + math.sqrt(2)) ** 4)
    factor = constants.LATTICE_POINT_FACTOR
    assert 1 / factor <= result.ratio <= factor


# ---------- right-hand sides ----------


def test_rhs_at_unit_parameters():
    assert omega_rhs(1, 1, 1, 1, 1) == pytest.approx(16)
    assert psi_rhs(1, 1, 1, 1, 1) == pytest.approx(25)
    assert trace_free_rhs(1, 1, 1, 1, 1) == pytest.approx(6)
    assert heart_rhs(1, 1, 1, 1, 1, 1) == pytest.approx(6)
    assert upper_triangular_rhs(1, 1, 1, 1, 1) == pytest.approx(4)
    assert volume_heuristic(2, 1, 0.25, 0.5, 2) == pytest.approx(1.0)


def test_proposition_rhs_dispatch():
    assert proposition_rhs(Proposition.PSI, 1, 1, 1, 1, 1) == psi_rhs(1, 1, 1, 1, 1)
    assert proposition_rhs(Proposition.HEART, 1, 1, 1, 1, 1, 1) == heart_rhs(1, 1, 1, 1, 1, 1)


# ---------- grids and reports ----------


def test_ell_values():
    assert ell_values(6, "one") == [1]
    assert ell_values(6, "N") == [6]
    assert ell_values(6, "one-and-N") == [1, 6]
    assert ell_values(6, "all") == [1, 2, 3, 6]
    assert ell_values(1, "one-and-N") == [1]


def test_count_grid_validation():
    with pytest.raises(ValueError):
        CountGrid(N_values=[1], ell_mode="some")
    with pytest.raises(ValueError):
        CountGrid(N_values=[1], deltas=[1.5])


def test_grid_points_skip_non_squarefree():
    grid = CountGrid(N_values=[1, 4, 6], Ls=[1.0, 2.0])
    points = grid_points(Proposition.OMEGA, grid, constant=1.0)
    assert [(p.N, p.ell, p.L) for p in points] == [
        (1, 1, 1.0),
        (1, 1, 2.0),
        (6, 1, 1.0),
        (6, 1, 2.0),
        (6, 6, 1.0),
        (6, 6, 2.0),
    ]


def test_verify_bound_single_point():
    report = verify_bound(Proposition.OMEGA, CountGrid(N_values=[1]), max_workers=1)
    (row,) = report.rows
    assert (row.count, row.rhs) == (608, pytest.approx(16.0))
    assert row.ratio == pytest.approx(38.0)
    assert not row.flag
    assert report.constant == constants.OMEGA_PROP_CONSTANT
    assert report.metadata.constants_version == constants.CONSTANTS_VERSION
    assert fit_constant(report) == pytest.approx(38.0)


def test_verify_bound_flags_without_raising():
    report = verify_bound(Proposition.OMEGA, CountGrid(N_values=[1]), constant=1.0, max_workers=1)
    assert len(report.flagged) == 1


def test_verify_bound_lists_budget_skips():
    report = verify_bound(Proposition.PSI, CountGrid(N_values=[1]), budget=1, max_workers=1)
    assert report.rows == []
    (skipped,) = report.metadata.skipped
    assert skipped.N == 1 and "budget" in skipped.reason


def test_heart_rows_carry_volume():
    grid = CountGrid(N_values=[1], hearts=[1.0, 0.25])
    report = verify_bound(Proposition.HEART, grid, max_workers=1)
    assert [row.heart for row in report.rows] == [1.0, 0.25]
    assert all(row.volume is not None for row in report.rows)


def test_report_is_independent_of_workers():
    grid = CountGrid(N_values=[1, 2, 3], Ls=[1.0, 2.0])
    serial = verify_bound(Proposition.OMEGA, grid, max_workers=1)
    parallel = verify_bound(Proposition.OMEGA, grid, max_workers=2)
    assert serial.rows == parallel.rows
    assert serial.metadata.config_hash == parallel.metadata.config_hash


@pytest.mark.slow
@pytest.mark.parametrize("proposition", [Proposition.OMEGA, Proposition.PSI, Proposition.TRACE_FREE])
def test_propositions_hold_on_fit_range(proposition):
    grid = CountGrid(
        N_values=[1, 2, 3, 5, 6],
        deltas=[1.0, 0.25, 0.0625],
        Ls=[float(L) for L in range(1, 9)],
        g_values=["I", "diag:4"],
    )
    report = verify_bound(proposition, grid)
    assert not report.flagged
    assert not report.metadata.skipped


# ---------- integer frame ----------


def test_object_arithmetic_switch():
    # enclosing ellipsoid candidates reach P' = 2L^2, i.e. scaled P ~ 4S^2L^2
    assert not needs_object_arithmetic(2**13, 1)
    assert needs_object_arithmetic(2**14, 1)
    assert needs_object_arithmetic(2**7, Fraction(128))
    assert not needs_object_arithmetic(1, 1000)
