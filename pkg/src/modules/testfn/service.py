"""
Service layer for the test-function module.

The archimedean test function Phi(P, tau) with Selberg/Harish-Chandra
transform h(t; tau) = h(t) cosh(alpha t) 2 sqrt|tau| K_{it}(2 pi |tau|),
evaluated by two independent routes:

- abel:     Phi = -(2 sqrt 2 / pi) int_0^inf Q_P(w^2 + P; tau) dw
- spectral: Phi = (2 pi |tau|)^-1 int_0^inf h(t; tau) Xi(t, u) tanh(pi t) t dt

plus the forward transform, the Fourier kernel of the Bessel factor and
the harmonic-oscillator PDE residual.
"""

import math
from dataclasses import dataclass
from typing import Callable, Hashable, Optional, Sequence

import numpy as np

from src.config import settings
from src.core.exceptions import ConvergenceError, ValidationError
from src.core.logging import get_logger, log_performance
from src.core.quadrature import integrate_refined, panel_rule
from src.modules.reporting import metrics
from src.modules.specfun.bessel import bessel_k_imag_scaled_many
from src.modules.specfun.schemas import Precision
from src.modules.specfun.spherical import spherical_xi, spherical_xi_many

from .enums import PhiRoute, WindowType
from .kernels import kernel, kernel_with_derivative, log_amplitude, slow_phase_rate
from .schemas import HALF_PI, PhiValue, QValue, SpectralWindow

logger = get_logger("testfn.service")

TWO_PI = 2.0 * math.pi
ABEL_FACTOR = -2.0 * math.sqrt(2.0) / math.pi
_EPS = np.finfo(float).eps

# t-marching in the spectral and Fourier routes
_T_PANEL_WIDTH = 2.0
_T_PANELS_PER_BLOCK = 8
_T_ORDER = 24
# nats below the peak at which the Gaussian convolution is cut
_GAUSSIAN_DYNAMIC_RANGE = 40.0
_ABEL_CHUNK = 512


def _precision(prec: Optional[Precision]) -> Precision:
    return prec or Precision.default()


# ==================== h(t; tau) and g ====================


def h_transform(t, tau: float, window: SpectralWindow, prec: Optional[Precision] = None):
    """
    h(t; tau) = h(t) cosh(alpha t) 2 sqrt|tau| K_{it}(2 pi |tau|).

    cosh(alpha t) e^{-pi|t|/2} is combined analytically with the scaled
    Bessel value. Even in t and in tau.

    Raises:
        ValidationError: if tau == 0
    """
    if tau == 0:
        raise ValidationError("h(t; tau) needs tau != 0", field="tau", value=tau)
    t_arr = np.abs(np.atleast_1d(np.asarray(t, dtype=float)))
    scaled = bessel_k_imag_scaled_many(t_arr, TWO_PI * abs(tau), _precision(prec))
    value = _h_from_scaled(t_arr, scaled, tau, window)
    return float(value[0]) if np.ndim(t) == 0 else value


def _h_from_scaled(t: np.ndarray, scaled: np.ndarray, tau: float, window: SpectralWindow) -> np.ndarray:
    alpha = window.alpha
    damping = 0.5 * (np.exp(-(HALF_PI - alpha) * t) + np.exp(-(HALF_PI + alpha) * t))
    return window.h(t) * 2.0 * math.sqrt(abs(tau)) * damping * scaled


def g_density(r, window: SpectralWindow) -> np.ndarray:
    """
    Absolutely continuous part of g(r) = (2 pi)^-1 int h(t) e^{irt} dt.

    Unit and cosine-sum windows have no density; their measure is the
    point masses of `SpectralWindow.point_masses` (weight c_j/2 at
    +-beta_j). Gaussian windows give sigma/(2 sqrt pi) e^{-sigma^2 r^2/4}.
    """
    r = np.asarray(r, dtype=float)
    if window.kind is not WindowType.GAUSSIAN:
        return np.zeros_like(r)
    sigma = window.sigma
    return sigma / (2.0 * math.sqrt(math.pi)) * np.exp(-0.25 * sigma * sigma * r * r)


def fourier_kernel(r, tau: float, alpha: float):
    """sqrt|tau| e^{-2 pi |tau| cos(alpha) cosh r} cos(2 pi |tau| sin(alpha) sinh r)."""
    r_arr = np.asarray(r, dtype=float)
    x = TWO_PI * abs(tau)
    value = math.sqrt(abs(tau)) * np.exp(-x * math.cos(alpha) * np.cosh(r_arr)) * np.cos(
        x * math.sin(alpha) * np.sinh(r_arr)
    )
    return float(value) if np.ndim(r) == 0 else value


# ==================== t-marching ====================


@dataclass
class _MarchResult:
    sums: np.ndarray
    l1: np.ndarray
    tail: np.ndarray
    t_end: float


def _march(
    block: Callable[[np.ndarray], np.ndarray],
    rows: int,
    rate: float,
    transition: float,
    tol: float,
    operation: str,
) -> _MarchResult:
    """
    int_0^inf of a batch of integrands over t, block by block.

    Each block is 8 Gauss-Legendre panels of width 2. Past `transition`
    (the Bessel turning point plus a margin) the tail after a block is bounded by the block's
    L1 mass times rho/(1 - rho), rho = e^{-16 rate}; marching stops when
    that bound is below tol*|sum| + 64 eps * L1 for every row.
    """
    width = _T_PANEL_WIDTH * _T_PANELS_PER_BLOCK
    rho = math.exp(-width * rate)
    cap = (40.0 + 10.0 * math.log1p(1.0 / tol)) / rate + transition
    sums = np.zeros(rows)
    l1 = np.zeros(rows)
    previous = np.full(rows, np.inf)
    t0 = 0.0
    blocks = 0
    while True:
        nodes, weights = panel_rule(t0, t0 + width, _T_PANELS_PER_BLOCK, _T_ORDER)
        values = np.atleast_2d(block(nodes))
        block_sum = values @ weights
        block_l1 = np.abs(values) @ weights
        sums += block_sum
        l1 += block_l1
        t0 += width
        blocks += 1
        tail = block_l1 * rho / (1.0 - rho)
        settled = np.all(tail <= tol * np.abs(sums) + 64 * _EPS * l1) and np.all(block_l1 <= previous)
        if t0 >= transition and settled:
            metrics.record_refinements(operation, blocks)
            return _MarchResult(sums=sums, l1=l1, tail=tail, t_end=t0)
        if t0 > cap:
            raise ConvergenceError(
                f"{operation}: t-integral did not settle below t={cap:.1f}",
                operation=operation,
                iterations=blocks,
            )
        previous = block_l1


def fourier_kernel_quadrature(r, tau: float, alpha: float, prec: Optional[Precision] = None):
    """
    (sqrt|tau| / pi) int cosh(alpha t) K_{it}(2 pi |tau|) e^{irt} dt by quadrature.

    Independent of the closed form `fourier_kernel`; the t-range is set
    by the e^{-(pi/2 - alpha)|t|} envelope.
    """
    if tau == 0:
        raise ValidationError("The Fourier kernel quadrature needs tau != 0", field="tau", value=tau)
    if not 0 <= alpha < HALF_PI:
        raise ValidationError("alpha must lie in [0, pi/2)", field="alpha", value=alpha)
    prec = _precision(prec)
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    x = TWO_PI * abs(tau)
    prefactor = 2.0 * math.sqrt(abs(tau)) / math.pi

    def block(t: np.ndarray) -> np.ndarray:
        scaled = bessel_k_imag_scaled_many(t, x, prec)
        damping = 0.5 * (np.exp(-(HALF_PI - alpha) * t) + np.exp(-(HALF_PI + alpha) * t))
        return prefactor * (damping * scaled)[None, :] * np.cos(np.outer(r_arr, t))

    result = _march(block, len(r_arr), HALF_PI - alpha, x + 16.0, prec.target_rel_tol, "fourier_kernel")
    return float(result.sums[0]) if np.ndim(r) == 0 else result.sums


# ==================== Q(P; tau) ====================


def _check_cone(P: np.ndarray, tau: np.ndarray) -> None:
    if np.any(P < np.abs(tau) * (1.0 - 1e-12)):
        bad = np.flatnonzero((P < np.abs(tau) * (1.0 - 1e-12)).ravel())[0]
        raise ValidationError(
            "Q(P; tau) needs P >= |tau|",
            field="P",
            value=(P.ravel()[bad], np.broadcast_to(tau, P.shape).ravel()[bad]),
        )


def _unit_q(P: np.ndarray, tau: np.ndarray, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    c, s = math.cos(alpha), math.sin(alpha)
    R = np.sqrt(np.maximum(P * P - tau * tau, 0.0))
    decay = 0.5 * np.exp(-TWO_PI * c * P)
    phase = TWO_PI * s * R
    Q = decay * np.cos(phase)
    Q_P = decay * (-TWO_PI * c * np.cos(phase) - (TWO_PI * s) ** 2 * P * np.sinc(phase / math.pi))
    return Q, Q_P


def _point_mass_q(P, tau, window: SpectralWindow) -> tuple[np.ndarray, np.ndarray]:
    Q = np.zeros(np.broadcast(P, tau).shape)
    Q_P = np.zeros_like(Q)
    for weight, beta in window.point_masses():
        S, S_P = kernel_with_derivative(beta, P, tau, window.alpha)
        Q += 0.5 * weight * S
        Q_P += 0.5 * weight * S_P
    return Q, Q_P


def _gaussian_q(P: np.ndarray, tau: np.ndarray, window: SpectralWindow, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """int_0^inf g(l) S(l) dl and its P-derivative, batched over flat P, tau."""
    sigma, alpha = window.sigma, window.alpha
    log_g0 = math.log(sigma / (2.0 * math.sqrt(math.pi)))
    ell_cut = 2.0 * math.sqrt(_GAUSSIAN_DYNAMIC_RANGE + 5.0) / sigma
    coarse = np.linspace(0.0, ell_cut, 801)

    Q = np.empty_like(P)
    Q_P = np.empty_like(P)
    for start in range(0, len(P), 256):
        p, t = P[start : start + 256], tau[start : start + 256]
        log_amp = log_amplitude(coarse[None, :], p[:, None], t[:, None], alpha) - 0.25 * sigma**2 * coarse**2
        peak = log_amp.max(axis=1)
        relevant = log_amp >= (peak - _GAUSSIAN_DYNAMIC_RANGE)[:, None]
        last = np.max(np.where(relevant, np.arange(len(coarse))[None, :], 0), axis=1)
        ell_max = float(coarse[min(int(last.max()) + 1, len(coarse) - 1)])
        in_range = coarse <= ell_max
        rate = slow_phase_rate(coarse[None, in_range], p[:, None], t[:, None], alpha)
        rate = float(np.max(np.where(relevant[:, in_range], rate, 0.0)))
        panels = 8 + int(rate * ell_max / math.pi)
        floor = 1e-15 * np.exp(peak + log_g0) * (1.0 + p * math.cosh(ell_max))

        def integrand(ell: np.ndarray, p=p, t=t) -> np.ndarray:
            S, S_P = kernel_with_derivative(ell[None, :], p[:, None], t[:, None], alpha)
            g = g_density(ell, window)[None, :]
            return np.concatenate([g * S, g * S_P], axis=0)

        result = integrate_refined(
            integrand,
            0.0,
            ell_max,
            rel_tol=0.01 * tol,
            abs_tol=np.concatenate([floor, floor]),
            panels=panels,
            order=16,
            max_refinements=settings.numerics.max_refinements,
            operation="q_gaussian",
        )
        metrics.record_refinements("q_gaussian", result.refinements)
        Q[start : start + 256] = result.value[: len(p)]
        Q_P[start : start + 256] = result.value[len(p) :]
    return Q, Q_P


def q_eval(P, tau, window: SpectralWindow, prec: Optional[Precision] = None) -> QValue:
    """
    Q(P; tau) = 1/2 int g(l) S(l; P, tau) dl and Q_P, broadcasting over P and tau.

    Unit windows use the closed form 1/2 e^{-2 pi cos(alpha) P}
    cos(2 pi sin(alpha) sqrt(P^2 - tau^2)); cosine sums add shifted
    kernels at their frequencies; Gaussian windows integrate against g.

    Raises:
        ValidationError: if P < |tau| anywhere
    """
    P_arr, tau_arr = np.broadcast_arrays(np.asarray(P, dtype=float), np.asarray(tau, dtype=float))
    _check_cone(P_arr, tau_arr)
    if window.kind is WindowType.UNIT:
        Q, Q_P = _unit_q(P_arr, tau_arr, window.alpha)
    elif window.kind is WindowType.COSINE_SUM:
        Q, Q_P = _point_mass_q(P_arr, tau_arr, window)
    else:
        tol = _precision(prec).target_rel_tol
        Q, Q_P = _gaussian_q(P_arr.ravel().copy(), tau_arr.ravel().copy(), window, tol)
        Q, Q_P = Q.reshape(P_arr.shape), Q_P.reshape(P_arr.shape)
    return QValue(Q=Q, Q_P=Q_P)


def q_value(P: float, tau: float, window: SpectralWindow, prec: Optional[Precision] = None) -> float:
    """Q(P; tau) alone, through the kernel S for every window type."""
    if window.kind is WindowType.GAUSSIAN:
        return float(q_eval(P, tau, window, prec).Q)
    _check_cone(np.asarray(P, dtype=float), np.asarray(tau, dtype=float))
    return float(sum(0.5 * weight * kernel(beta, P, tau, window.alpha) for weight, beta in window.point_masses()))


# ==================== Abel route ====================


def _abel_batch(
    P: np.ndarray, tau: np.ndarray, window: SpectralWindow, prec: Precision
) -> tuple[np.ndarray, np.ndarray]:
    """Abel integral for flat arrays P, tau; returns (values, error estimates)."""
    tol = prec.target_rel_tol
    c, s = math.cos(window.alpha), math.sin(window.alpha)
    max_doublings = settings.numerics.max_refinements

    def integrand(w: np.ndarray) -> np.ndarray:
        Pw = P[:, None] + (w * w)[None, :]
        return ABEL_FACTOR * q_eval(Pw, tau[:, None], window, prec).Q_P

    W = math.sqrt(math.log(1e2 / tol) / (TWO_PI * c))
    nodes = np.linspace(0.0, W, 33)
    scale = np.abs(integrand(nodes)).max(axis=1) * W
    floor = np.maximum(1e-15 * scale, 1e-300)

    def segment(a: float, b: float):
        panels = 4 + int(s * (b * b - a * a))
        result = integrate_refined(
            integrand,
            a,
            b,
            rel_tol=tol,
            abs_tol=floor,
            panels=panels,
            order=16,
            max_refinements=max_doublings,
            operation="phi_abel",
        )
        metrics.record_refinements("phi_abel", result.refinements)
        return np.asarray(result.value, dtype=float), result.error_estimate

    total, error = segment(0.0, W)
    for _ in range(max_doublings):
        piece, piece_error = segment(W, 2.0 * W)
        total = total + piece
        error += piece_error
        W *= 2.0
        if np.all(np.abs(piece) <= tol * np.abs(total) + floor):
            return total, error + np.abs(piece)
    raise ConvergenceError(
        "phi_abel: tail bound unachievable at the requested tolerance",
        operation="phi_abel",
        iterations=max_doublings,
    )


def phi_abel_many(P, tau, window: SpectralWindow, prec: Optional[Precision] = None) -> tuple[np.ndarray, np.ndarray]:
    """
    Abel-route values for arrays P, tau (broadcast), in chunks.

    The Abel route is continuous across tau = 0 and evaluates there
    directly with sqrt(P^2 - tau^2) = P.

    Returns:
        (values, error_estimates) shaped like the broadcast inputs
    """
    prec = _precision(prec)
    P_arr, tau_arr = np.broadcast_arrays(np.asarray(P, dtype=float), np.asarray(tau, dtype=float))
    _check_cone(P_arr, tau_arr)
    flat_P, flat_tau = P_arr.ravel(), tau_arr.ravel()
    values = np.empty_like(flat_P)
    errors = np.empty_like(flat_P)
    for start in range(0, len(flat_P), _ABEL_CHUNK):
        chunk = slice(start, start + _ABEL_CHUNK)
        values[chunk], errors[chunk] = _abel_batch(flat_P[chunk], flat_tau[chunk], window, prec)
    metrics.record_phi_evaluation(PhiRoute.ABEL.value, len(flat_P))
    return values.reshape(P_arr.shape), errors.reshape(P_arr.shape)


def phi_abel(P: float, tau: float, window: SpectralWindow, prec: Optional[Precision] = None) -> PhiValue:
    """
    Phi(P, tau) = -(sqrt 2 / pi) int_0^inf v^{-1/2} Q_P(v + P; tau) dv.

    The substitution v = w^2 removes the v^{-1/2} factor; the truncation
    point is doubled until the last segment is below tolerance. At tau = 0
    the result is tagged null_locus.

    Raises:
        ValidationError: if P < |tau|
        ConvergenceError: if the tail does not settle
    """
    values, errors = phi_abel_many(np.array([P]), np.array([tau]), window, prec)
    logger.debug("Abel route evaluated", event="phi_abel_complete", P=P, tau=tau, value=float(values[0]))
    return PhiValue(
        value=float(values[0]),
        route=PhiRoute.ABEL,
        error_estimate=float(errors[0]),
        null_locus=tau == 0,
    )


# ==================== spectral route ====================


def phi_spectral_many(
    P_values: Sequence[float], tau: float, window: SpectralWindow, prec: Optional[Precision] = None
) -> list[PhiValue]:
    """
    Spectral-route values for several P at one tau, sharing the Bessel table.

    tau = 0 is evaluated at |tau| = tau_floor and tagged null_locus.
    """
    prec = _precision(prec)
    tol = prec.target_rel_tol
    null_locus = tau == 0
    abs_tau = settings.numerics.tau_floor if null_locus else abs(tau)
    P_arr = np.atleast_1d(np.asarray(P_values, dtype=float))
    _check_cone(P_arr, np.full_like(P_arr, abs_tau))
    u_values = np.maximum(P_arr - abs_tau, 0.0) / (2.0 * abs_tau)
    x = TWO_PI * abs_tau

    def block(t: np.ndarray) -> np.ndarray:
        h_tau = _h_from_scaled(t, bessel_k_imag_scaled_many(t, x, prec), abs_tau, window)
        weight = h_tau * np.tanh(math.pi * t) * t
        return np.stack([weight * spherical_xi_many(t, float(u), prec) for u in u_values])

    result = _march(block, len(P_arr), window.decay_rate, x + 16.0, tol, "phi_spectral")
    norm = TWO_PI * abs_tau
    metrics.record_phi_evaluation(PhiRoute.SPECTRAL.value, len(P_arr))
    logger.debug(
        "Spectral route evaluated",
        event="phi_spectral_complete",
        tau=tau,
        points=len(P_arr),
        t_end=result.t_end,
    )
    return [
        PhiValue(
            value=float(result.sums[i] / norm),
            route=PhiRoute.SPECTRAL,
            error_estimate=float((result.tail[i] + 64 * _EPS * result.l1[i]) / norm),
            null_locus=null_locus,
        )
        for i in range(len(P_arr))
    ]


def phi_spectral(P: float, tau: float, window: SpectralWindow, prec: Optional[Precision] = None) -> PhiValue:
    """
    Phi = k(u; tau)/|tau|, k = (4 pi)^-1 int h(t; tau) Xi_{1/2+it}(u) tanh(pi t) t dt,
    u = (P - |tau|)/(2|tau|).
    """
    return phi_spectral_many([P], tau, window, prec)[0]


def phi_of_entries(
    entries: Sequence[float],
    window: SpectralWindow,
    route: PhiRoute = PhiRoute.ABEL,
    prec: Optional[Precision] = None,
) -> PhiValue:
    """Phi at a real matrix (m11, m12, m21, m22); depends only on P and det."""
    m11, m12, m21, m22 = (float(v) for v in entries)
    P = 0.5 * (m11 * m11 + m12 * m12 + m21 * m21 + m22 * m22)
    tau = m11 * m22 - m12 * m21
    P = max(P, abs(tau))
    if route is PhiRoute.ABEL:
        return phi_abel(P, tau, window, prec)
    return phi_spectral(P, tau, window, prec)


def routes_agree(abel: PhiValue, spectral: PhiValue, rel_tol: float = 1e-6) -> bool:
    """|abel - spectral| within rel_tol*|Phi| plus both routes' error estimates."""
    diff = abs(abel.value - spectral.value)
    return diff <= rel_tol * abs(abel.value) + abel.error_estimate + spectral.error_estimate


# ==================== forward transform ====================


def k_kernel(u, tau: float, window: SpectralWindow, prec: Optional[Precision] = None):
    """k(u; tau) = |tau| Phi(|tau|(1 + 2u), tau)."""
    if tau == 0:
        raise ValidationError("k(u; tau) needs tau != 0", field="tau", value=tau)
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr < 0):
        raise ValidationError("u must be nonnegative", field="u", value=u)
    values, _ = phi_abel_many(abs(tau) * (1.0 + 2.0 * u_arr), tau, window, prec)
    values = abs(tau) * values
    return float(values) if np.ndim(u) == 0 else values


@log_performance("testfn.service")
def selberg_forward(
    window: SpectralWindow,
    tau: float,
    t: float,
    prec: Optional[Precision] = None,
    rel_tol: float = 1e-8,
) -> float:
    """
    h(t; tau) = 4 pi int_0^inf k(u; tau) Xi_{1/2+it}(u) du, with u = w^2.

    k comes from the Abel route, so comparing with `h_transform` is a
    round trip through both transforms.
    """
    if tau == 0:
        raise ValidationError("The forward transform needs tau != 0", field="tau", value=tau)
    prec = _precision(prec)
    c, s = math.cos(window.alpha), math.sin(window.alpha)
    abs_tau = abs(tau)
    max_doublings = settings.numerics.max_refinements

    def integrand(w: np.ndarray) -> np.ndarray:
        u = w * w
        k = k_kernel(u, tau, window, prec)
        xi = np.array([spherical_xi(t, float(v), prec) for v in u])
        return 8.0 * math.pi * w * k * xi

    def segment(a: float, b: float) -> float:
        panels = 8 + int(2.0 * s * abs_tau * (b * b - a * a))
        result = integrate_refined(
            integrand,
            a,
            b,
            rel_tol=rel_tol,
            abs_tol=1e-15,
            panels=panels,
            order=16,
            max_refinements=max_doublings,
            operation="selberg_forward",
        )
        return float(result.value)

    W = math.sqrt(math.log(1e2 / rel_tol) / (4.0 * math.pi * c * abs_tau))
    total = segment(0.0, W)
    for _ in range(max_doublings):
        piece = segment(W, 2.0 * W)
        total += piece
        W *= 2.0
        if abs(piece) <= rel_tol * abs(total) + 1e-15:
            return total
    raise ConvergenceError("selberg_forward: u-integral did not settle", operation="selberg_forward")


# ==================== PDE ====================


def _tailored_P_tau(coords: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a, b, c, d = coords[..., 0], coords[..., 1], coords[..., 2], coords[..., 3]
    P = a * a + b * b + c * c + d * d
    tau = a * a - b * b - c * c + d * d
    return P, tau


def _raw_residual(point: np.ndarray, window: SpectralWindow, step: float, prec: Precision) -> float:
    shifts = np.zeros((9, 4))
    for axis in range(4):
        shifts[1 + 2 * axis, axis] = step
        shifts[2 + 2 * axis, axis] = -step
    P, tau = _tailored_P_tau(point[None, :] + shifts)
    values, _ = phi_abel_many(P, tau, window, prec)
    center = values[0]
    second = [(values[1 + 2 * k] + values[2 + 2 * k] - 2.0 * center) / (step * step) for k in range(4)]
    laplacian = 0.25 * (second[0] - second[1] - second[2] + second[3])
    return float(-laplacian + 4.0 * math.pi**2 * tau[0] * center)


def pde_residual(
    coords: Sequence[float],
    window: SpectralWindow,
    step: Optional[float] = None,
    richardson: bool = True,
    prec: Optional[Precision] = None,
) -> float:
    """
    -Delta Phi + 4 pi^2 det Phi at tailored coordinates (a, b, c, d), where
    Delta = 1/4 (d_a^2 - d_b^2 - d_c^2 + d_d^2) by central differences.

    With richardson=True the O(h^2) differences at h and h/2 are combined
    into an O(h^4) estimate.

    Raises:
        ValidationError: outside P >= 1.2|tau|, |tau| >= 0.1
    """
    point = np.asarray(coords, dtype=float)
    P, tau = _tailored_P_tau(point)
    if not (abs(tau) >= 0.1 and P >= 1.2 * abs(tau)):
        raise ValidationError(
            "PDE residual needs P >= 1.2|tau| and |tau| >= 0.1",
            field="coords",
            value=tuple(point),
        )
    step = step or settings.numerics.fd_step
    prec = prec or Precision(target_rel_tol=1e-13, working_digits=30)
    coarse = _raw_residual(point, window, step, prec)
    if not richardson:
        return coarse
    fine = _raw_residual(point, window, 0.5 * step, prec)
    return (4.0 * fine - coarse) / 3.0


# ==================== batched evaluation ====================


class PhiEvaluator:
    """
    Abel-route evaluation of many (P, tau) with a per-instance memo.

    Callers pass exact keys (for example integer invariants of lattice
    points) so that repeated (P, tau) are evaluated once.
    """

    def __init__(self, window: SpectralWindow, prec: Optional[Precision] = None):
        self.window = window
        self.prec = _precision(prec)
        self._memo: dict[Hashable, float] = {}
        self.null_locus_evaluations = 0

    def __len__(self) -> int:
        return len(self._memo)

    def evaluate(self, P: np.ndarray, tau: np.ndarray, keys: Optional[Sequence[Hashable]] = None) -> np.ndarray:
        P = np.asarray(P, dtype=float)
        tau = np.asarray(tau, dtype=float)
        if keys is None:
            keys = list(zip(P.tolist(), tau.tolist()))
        missing: dict[Hashable, int] = {}
        for i, key in enumerate(keys):
            if key not in self._memo and key not in missing:
                missing[key] = i
        if missing:
            idx = np.fromiter(missing.values(), dtype=np.int64, count=len(missing))
            values, _ = phi_abel_many(P[idx], tau[idx], self.window, self.prec)
            self.null_locus_evaluations += int(np.count_nonzero(tau[idx] == 0))
            for key, value in zip(missing, values):
                self._memo[key] = float(value)
        return np.array([self._memo[key] for key in keys], dtype=float)
