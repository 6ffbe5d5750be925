from fractions import Fraction

import pytest

from src.core.exceptions import ValidationError
from src.modules.algebra.schemas import GroupElement, HalfPlanePoint, LatticeSpec
from src.modules.harness.checks import theta_oracle
from src.modules.testfn.schemas import SpectralWindow
from src.modules.theta.schemas import BoundGrid, BoundReport, DetProfile, ThetaConfig
from src.modules.theta.service import (
    bound_points,
    geometric_fourth_moment_bound,
    theta_det_profile,
    theta_eval,
    truncation_certificate,
)

IDENTITY = GroupElement.identity()


@pytest.fixture
def unit_config(unit_spec, unit_window) -> ThetaConfig:
    return ThetaConfig(spec=unit_spec, window=unit_window)


def test_det_profile_l2():
    profile = DetProfile(sums={Fraction(1): 3.0, Fraction(0): 4.0}, p_cut=1.0, terms=2)
    assert profile.l2 == 25.0


def test_certificate_shrinks_with_cut(unit_config):
    certificates = [truncation_certificate(unit_config, 1.0, p_cut) for p_cut in (1.0, 2.0, 4.0, 8.0)]
    assert certificates == sorted(certificates, reverse=True)
    assert certificates[-1] > 0


def test_det_profile_needs_positive_y(unit_config):
    with pytest.raises(ValidationError):
        theta_det_profile(unit_config, 0.0)


def test_bound_points_default_grid():
    points = bound_points(IDENTITY, IDENTITY, 1, 3.0, BoundGrid())
    assert [(p.ell, p.L) for p in points] == [(1, 1.0)] * 4
    assert [p.delta for p in points] == [1.0, 0.5, 0.25, 0.125]
    assert points[0].hearts == (1.0, 0.5)


def test_bound_points_start_at_emptiness_scale():
    points = bound_points(IDENTITY, IDENTITY, 6, 3.0, BoundGrid(ell_values=[2], delta_min=1.0))
    assert [p.L for p in points] == pytest.approx([2**-0.5, 2**0.5])
    assert all(p.ell == 2 for p in points)


def test_bound_points_reject_non_divisor():
    with pytest.raises(ValidationError):
        bound_points(IDENTITY, IDENTITY, 6, 3.0, BoundGrid(ell_values=[4]))


def test_bound_at_unit_point():
    report = geometric_fourth_moment_bound(IDENTITY, IDENTITY, 1, 3.0, BoundGrid(delta_min=1.0), max_workers=1)
    assert [(row.heart, row.count_g1, row.count_g2) for row in report.rows] == [(1.0, 608, 608), (0.5, 352, 352)]
    assert [row.value for row in report.rows] == pytest.approx([608.0, 704.0])
    assert report.maximum == pytest.approx(704.0)
    assert all(row.argmax == "g1" for row in report.rows)
    assert report.g1 == report.g2 == "I"
    assert not report.metadata.skipped


def test_bound_csv_columns():
    assert ",".join(BoundReport.CSV_COLUMNS) == "N,ell,L,delta,heart,count_g1,count_g2,value,argmax"


@pytest.mark.parametrize("N, T", [(1, 2.0), (4, 3.0)])
def test_bound_rejects_parameters(N, T):
    with pytest.raises(ValidationError):
        geometric_fourth_moment_bound(IDENTITY, IDENTITY, N, T)


@pytest.mark.slow
def test_theta_golden_value(unit_config):
    result = theta_eval(unit_config, HalfPlanePoint(0.0, 1.0))
    assert result.converged
    assert abs(result.value - theta_oracle()) <= 1e-8
    assert result.value.real == pytest.approx(1.3932039297, rel=1e-9)


@pytest.mark.slow
def test_theta_is_invariant_under_gamma0():
    cfg = ThetaConfig(spec=LatticeSpec(N=1), window=SpectralWindow.unit(0.0))
    z = complex(0.3, 0.8)
    moved = -1 / z
    before = theta_eval(cfg, HalfPlanePoint.from_complex(z)).value
    after = theta_eval(cfg, HalfPlanePoint.from_complex(moved)).value
    assert abs(after - before) <= 1e-4 * abs(before)


@pytest.mark.slow
def test_det_profile_matches_theta_at_real_zero(unit_config):
    profile = theta_det_profile(unit_config, 1.0)
    theta = theta_eval(unit_config, HalfPlanePoint(0.0, 1.0))
    # theta at x = 0 is y times the zero term plus the class sums
    nonzero = theta.value.real - 1.0
    assert sum(profile.sums.values()) == pytest.approx(nonzero, rel=1e-6)
