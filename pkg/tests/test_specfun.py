import math

import mpmath
import numpy as np
import pytest
from pydantic import ValidationError as PydanticValidationError

from src.core.exceptions import ValidationError
from src.modules.specfun.schemas import Precision
from src.modules.specfun.service import (
    AppendixGrid,
    bessel_k_imag,
    bessel_k_imag_scaled,
    bessel_k_imag_scaled_many,
    incomplete_gamma_q,
    spherical_xi,
    spherical_xi_many,
    verify_appendix_bounds,
    xi_mehler,
    xi_series,
)


def _k_reference(t: float, x: float) -> float:
    return float(mpmath.besselk(1j * t, x).real)


def _xi_reference(t: float, u: float) -> float:
    return float(mpmath.hyp2f1(0.5 + 1j * t, 0.5 - 1j * t, 1, -u).real)


# ---------- K_{it} ----------


@pytest.mark.parametrize("t, x", [(0.0, 1.0), (2.0, 2.5), (5.0, 6.0), (1.0, 30.0)])
def test_bessel_matches_mpmath(t, x):
    assert bessel_k_imag(t, x) == pytest.approx(_k_reference(t, x), rel=1e-9)


def test_bessel_is_even_in_t():
    assert bessel_k_imag(-3.0, 2.0) == pytest.approx(bessel_k_imag(3.0, 2.0), rel=1e-12)


def test_bessel_scaling():
    t, x = 4.0, 5.0
    assert bessel_k_imag_scaled(t, x) == pytest.approx(math.exp(math.pi * t / 2) * _k_reference(t, x), rel=1e-9)


def test_bessel_paths_agree_in_overlap():
    series = bessel_k_imag_scaled(3.0, 1.0, method="series", certify=True)
    quadrature = bessel_k_imag_scaled(3.0, 1.0, method="quadrature")
    assert series == pytest.approx(quadrature, rel=1e-9)


def test_bessel_large_argument_uses_quadrature():
    assert bessel_k_imag(2.0, 80.0) == pytest.approx(_k_reference(2.0, 80.0), rel=1e-8)


def test_bessel_table_matches_pointwise():
    t = [0.0, 1.0, -1.0, 2.5]
    table = bessel_k_imag_scaled_many(t, 0.7)
    assert np.allclose(table, [bessel_k_imag_scaled(v, 0.7) for v in t], rtol=1e-12)


@pytest.mark.parametrize("x", [0.0, -1.0, math.inf])
def test_bessel_rejects_bad_argument(x):
    with pytest.raises(ValidationError):
        bessel_k_imag(1.0, x)


def test_bessel_rejects_unknown_method():
    with pytest.raises(ValidationError):
        bessel_k_imag(1.0, 1.0, method="asymptotic")


# ---------- Xi ----------


@pytest.mark.parametrize("t, u", [(0.0, 0.1), (1.0, 0.3), (3.0, 0.45), (1.0, 5.0), (6.0, 2.0), (0.5, 150.0)])
def test_xi_matches_hypergeometric(t, u):
    assert spherical_xi(t, u) == pytest.approx(_xi_reference(t, u), rel=1e-8, abs=1e-12)


def test_xi_at_origin():
    assert spherical_xi(7.0, 0.0) == 1.0
    assert np.all(spherical_xi_many([0.0, 1.0, 2.0], 0.0) == 1.0)


def test_xi_series_and_mehler_agree():
    assert xi_series(2.0, 0.4) == pytest.approx(xi_mehler(2.0, 0.4), rel=1e-10)


def test_xi_on_the_critical_line():
    assert spherical_xi(s=complex(0.5, 1.5), u=0.8) == spherical_xi(1.5, 0.8)
    with pytest.raises(ValidationError):
        spherical_xi(s=complex(0.6, 1.0), u=0.8)


def test_xi_rejects_negative_u():
    with pytest.raises(ValidationError):
        spherical_xi(1.0, -0.1)


def test_xi_grid_matches_pointwise():
    t = np.array([0.0, 1.0, 4.0, 12.0])
    for u in (0.2, 3.0):
        assert np.allclose(spherical_xi_many(t, u), [spherical_xi(float(v), u) for v in t], rtol=1e-9, atol=1e-14)


# ---------- incomplete gamma ----------


@pytest.mark.parametrize("s", [1, 2, 3])
@pytest.mark.parametrize("x", [0.0, 0.5, 4.0, 30.0])
def test_incomplete_gamma(s, x):
    expected = float(mpmath.gammainc(s, x, regularized=True))
    assert incomplete_gamma_q(s, x) == pytest.approx(expected, rel=1e-13, abs=1e-300)


def test_incomplete_gamma_rejects():
    with pytest.raises(ValidationError):
        incomplete_gamma_q(4, 1.0)
    with pytest.raises(ValidationError):
        incomplete_gamma_q(2, -1.0)


# ---------- precision and envelopes ----------


def test_precision_needs_enough_digits():
    assert Precision(target_rel_tol=1e-12, working_digits=30).working_digits == 30
    with pytest.raises(PydanticValidationError):
        Precision(target_rel_tol=1e-20, working_digits=16)


@pytest.mark.slow
def test_appendix_bounds_fast_grid():
    report = verify_appendix_bounds(AppendixGrid.fast())
    assert report.passed, report.failure
    assert {(row.function, row.j) for row in report.rows} == {(f, j) for f in ("K", "Xi") for j in (0, 1, 2)}
