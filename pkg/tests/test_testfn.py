import math

import numpy as np
import pytest

from src.core.exceptions import ValidationError
from src.modules.specfun.schemas import Precision
from src.modules.specfun.service import bessel_k_imag
from src.modules.testfn.enums import PhiRoute, WindowType
from src.modules.testfn.kernels import kernel, kernel_with_derivative
from src.modules.testfn.schemas import HALF_PI, PhiValue, SpectralWindow
from src.modules.testfn.service import (
    PhiEvaluator,
    fourier_kernel,
    fourier_kernel_quadrature,
    g_density,
    h_transform,
    k_kernel,
    pde_residual,
    phi_abel,
    phi_abel_many,
    phi_of_entries,
    phi_spectral,
    phi_spectral_many,
    q_eval,
    q_value,
    routes_agree,
    selberg_forward,
)

# ---------- windows ----------


def test_long_window():
    window = SpectralWindow.long(3.0)
    assert window.alpha == pytest.approx(HALF_PI - 1 / 3)
    assert window.decay_rate == pytest.approx(1 / 3)
    assert window.descriptor() == "unit:T=3"


@pytest.mark.parametrize(
    "build",
    [
        lambda: SpectralWindow.unit(HALF_PI),
        lambda: SpectralWindow.long(2.0),
        lambda: SpectralWindow.cosine_sum([1.0], [1.0], alpha=1.0),
        lambda: SpectralWindow.cosine_sum([1.0, 2.0], [0.1]),
        lambda: SpectralWindow(kind=WindowType.GAUSSIAN),
    ],
)
def test_window_validation(build):
    with pytest.raises(ValidationError):
        build()


def test_window_weights():
    window = SpectralWindow.cosine_sum([1.0, 0.5], [0.0, 0.3])
    assert window.h(0.0) == pytest.approx(1.5)
    assert window.point_masses() == [(1.0, 0.0), (0.5, 0.3)]
    assert window.decay_rate == pytest.approx(HALF_PI - 0.3)
    gaussian = SpectralWindow.gaussian(2.0)
    assert gaussian.h(2.0) == pytest.approx(math.exp(-1.0))
    assert gaussian.point_masses() == []


def test_gaussian_density_has_unit_mass():
    window = SpectralWindow.gaussian(1.5)
    r, dr = np.linspace(-20, 20, 40001, retstep=True)
    assert g_density(r, window).sum() * dr == pytest.approx(1.0, rel=1e-8)
    assert not g_density(r, SpectralWindow.unit()).any()


# ---------- h(t; tau) and kernels ----------


def test_h_transform_against_bessel():
    window = SpectralWindow.unit(0.5)
    t, tau = 1.3, 0.8
    expected = math.cosh(0.5 * t) * 2 * math.sqrt(tau) * bessel_k_imag(t, 2 * math.pi * tau)
    assert h_transform(t, tau, window) == pytest.approx(expected, rel=1e-10)
    assert h_transform(t, -tau, window) == h_transform(t, tau, window)


def test_h_transform_needs_nonzero_tau(unit_window):
    with pytest.raises(ValidationError):
        h_transform(1.0, 0.0, unit_window)


def test_fourier_kernel_closed_form():
    assert fourier_kernel(0.0, 1.0, 0.0) == pytest.approx(math.exp(-2 * math.pi))
    values = fourier_kernel(np.array([0.0, 1.0]), 0.5, 0.3)
    assert values.shape == (2,)


def test_kernel_at_zero_shift():
    P, tau, alpha = 2.0, 1.2, 0.7
    R = math.sqrt(P * P - tau * tau)
    expected = math.exp(-2 * math.pi * math.cos(alpha) * P) * math.cos(2 * math.pi * math.sin(alpha) * R)
    assert float(kernel(0.0, P, tau, alpha)) == pytest.approx(expected, rel=1e-12)


def test_kernel_derivative_matches_difference():
    ell, P, tau, alpha, h = 0.4, 1.7, 0.9, 1.1, 1e-6
    _, S_P = kernel_with_derivative(ell, P, tau, alpha)
    numeric = (kernel(ell, P + h, tau, alpha) - kernel(ell, P - h, tau, alpha)) / (2 * h)
    assert float(S_P) == pytest.approx(float(numeric), rel=1e-6, abs=1e-14)


# ---------- Q(P; tau) ----------


def test_unit_q_closed_form(unit_window, e2pi):
    assert q_value(1.0, 0.5, unit_window) == pytest.approx(0.5 * e2pi, rel=1e-14)
    result = q_eval(np.array([1.0, 2.0]), 0.5, unit_window)
    assert result.Q_P == pytest.approx(-math.pi * np.exp(-2 * math.pi * np.array([1.0, 2.0])), rel=1e-12)


def test_cosine_sum_q_is_linear():
    single = SpectralWindow.cosine_sum([1.0], [0.2], alpha=0.4)
    double = SpectralWindow.cosine_sum([1.0, 1.0], [0.2, 0.2], alpha=0.4)
    assert q_value(1.5, 1.0, double) == pytest.approx(2 * q_value(1.5, 1.0, single), rel=1e-14)


def test_q_needs_light_cone(unit_window):
    with pytest.raises(ValidationError):
        q_eval(0.5, 1.0, unit_window)


# ---------- Abel route ----------


@pytest.mark.parametrize("P", [1.0, 2.0, 3.5])
@pytest.mark.parametrize("tau", [1.0, -1.0, 0.5, 0.0])
def test_abel_closed_form(unit_window, P, tau):
    value = phi_abel(P, tau, unit_window)
    assert value.value == pytest.approx(math.exp(-2 * math.pi * P), rel=1e-8)
    assert value.route is PhiRoute.ABEL
    assert value.null_locus == (tau == 0)


def test_abel_is_even_in_tau():
    window = SpectralWindow.long(3.0)
    values, _ = phi_abel_many(np.array([1.5, 1.5]), np.array([0.8, -0.8]), window)
    assert values[0] == pytest.approx(values[1], rel=1e-12)


def test_abel_rejects_outside_cone(unit_window):
    with pytest.raises(ValidationError):
        phi_abel(0.5, 1.0, unit_window)


def test_phi_of_entries(unit_window):
    value = phi_of_entries((1.0, 0.0, 0.0, 1.0), unit_window)
    assert value.value == pytest.approx(phi_abel(1.0, 1.0, unit_window).value, rel=1e-14)


def _rotation(theta: float) -> np.ndarray:
    return np.array([[math.cos(theta), math.sin(theta)], [-math.sin(theta), math.cos(theta)]])


def _cone_coordinates(m: np.ndarray) -> tuple[float, float]:
    return 0.5 * float((m * m).sum()), float(np.linalg.det(m))


@pytest.mark.parametrize("gamma", [[[1.2, 0.3], [-0.4, 0.9]], [[0.5, 1.1], [0.7, -0.8]]])
def test_phi_and_q_are_bi_rotation_invariant(gamma):
    window = SpectralWindow.long(3.0)
    m = np.array(gamma)
    base = phi_of_entries(m.ravel(), window).value
    P, tau = _cone_coordinates(m)
    base_q = q_value(P, tau, window)
    for left, right in [(0.3, 0.0), (0.0, 1.1), (0.7, -2.4), (math.pi / 2, math.pi), (2.9, 0.45)]:
        rotated = _rotation(left) @ m @ _rotation(right)
        assert phi_of_entries(rotated.ravel(), window).value == pytest.approx(base, rel=1e-9)
        assert q_value(*_cone_coordinates(rotated), window) == pytest.approx(base_q, rel=1e-9, abs=1e-15)


def test_k_kernel_is_scaled_phi():
    window = SpectralWindow.long(3.0)
    assert k_kernel(0.0, 2.0, window) == pytest.approx(2.0 * phi_abel(2.0, 2.0, window).value, rel=1e-12)
    with pytest.raises(ValidationError):
        k_kernel(-1.0, 2.0, window)


def test_phi_evaluator_memo(unit_window):
    evaluator = PhiEvaluator(unit_window)
    P = np.array([1.0, 1.0, 2.0])
    tau = np.array([0.0, 0.0, 1.0])
    first = evaluator.evaluate(P, tau, keys=[(2, 0), (2, 0), (4, 1)])
    assert len(evaluator) == 2
    assert evaluator.null_locus_evaluations == 1
    second = evaluator.evaluate(P, tau, keys=[(2, 0), (2, 0), (4, 1)])
    assert np.array_equal(first, second)
    assert len(evaluator) == 2


def test_pde_residual_vanishes_for_unit_window(unit_window):
    coords = (0.3, 1.2, 0.2, 0.9)
    P = sum(x * x for x in coords)
    phi = math.exp(-2 * math.pi * P)
    residual = pde_residual(coords, unit_window)
    assert abs(residual) <= 1e-4 * phi * (1 + 4 * math.pi**2 * P)


def test_pde_residual_domain(unit_window):
    with pytest.raises(ValidationError):
        pde_residual((0.0, 0.0, 0.0, 0.0), unit_window)
    with pytest.raises(ValidationError):
        pde_residual((1.0, 1.0, 0.0, 0.0), unit_window)


# ---------- route agreement ----------


def test_routes_agree_uses_error_estimates():
    abel = PhiValue(1.0, PhiRoute.ABEL, 0.0)
    assert routes_agree(abel, PhiValue(1.0 + 5e-7, PhiRoute.SPECTRAL, 0.0))
    assert not routes_agree(abel, PhiValue(1.0 + 1e-5, PhiRoute.SPECTRAL, 0.0))
    assert routes_agree(abel, PhiValue(1.0 + 1e-5, PhiRoute.SPECTRAL, 1e-5))


def test_phi_value_rejects_negative_error():
    with pytest.raises(ValidationError):
        PhiValue(1.0, PhiRoute.ABEL, -1.0)


@pytest.mark.slow
def test_spectral_closed_form(unit_window):
    for P in (1.0, 2.0):
        value = phi_spectral(P, 1.0, unit_window)
        assert value.value == pytest.approx(math.exp(-2 * math.pi * P), rel=1e-8)


@pytest.mark.slow
@pytest.mark.parametrize(
    "window, tau",
    [
        (SpectralWindow.long(3.0), 1.0),
        (SpectralWindow.long(3.0), -0.25),
        (SpectralWindow.gaussian(2.0, math.pi / 4), 1.0),
        (SpectralWindow.cosine_sum([1.0, -0.5], [0.0, 0.4], alpha=0.6), 0.5),
    ],
)
def test_routes_agree(window, tau):
    P_values = [1.01 * abs(tau), 3 * abs(tau)]
    for P, spectral in zip(P_values, phi_spectral_many(P_values, tau, window)):
        assert routes_agree(phi_abel(P, tau, window), spectral)


@pytest.mark.slow
@pytest.mark.parametrize("alpha", [0.0, math.pi / 4])
def test_fourier_identity(alpha):
    r = np.array([0.0, 1.0, 2.0])
    quadrature = fourier_kernel_quadrature(r, 0.5, alpha)
    assert np.allclose(quadrature, fourier_kernel(r, 0.5, alpha), rtol=0, atol=1e-8)


@pytest.mark.slow
def test_selberg_round_trip():
    window = SpectralWindow.long(3.0)
    for t in (0.0, 1.0):
        forward = selberg_forward(window, 1.0, t)
        assert forward == pytest.approx(h_transform(t, 1.0, window), rel=1e-4)


@pytest.mark.slow
def test_pde_residual_long_window():
    window = SpectralWindow.long(3.0)
    coords = (0.3, 1.2, 0.2, 0.9)
    P = sum(x * x for x in coords)
    phi = phi_abel(P, 0.09 - 1.44 - 0.04 + 0.81, window, Precision(target_rel_tol=1e-13, working_digits=30)).value
    scale = max(abs(phi), math.exp(-2 * math.pi * math.cos(window.alpha) * P)) * (1 + 4 * math.pi**2 * P)
    assert abs(pde_residual(coords, window)) <= 1e-4 * scale
