"""
The convolution kernel of Q(P; tau), symmetrised in l.

With c = cos(alpha), s = sin(alpha), R = sqrt(P^2 - tau^2):

    S(l) = E_c cos(y) cos(z) + E_s sin(y) sin(z)
    E_c  = e^{-2 pi c P ch} cosh(2 pi c R sh)
    E_s  = e^{-2 pi c P ch} sinh(2 pi c R sh)
    y = 2 pi s R ch,  z = 2 pi s P sh

so that Q(P; tau) = 1/2 int g(l) S(l) dl. The exponents are formed as
-pi c [(P - R) e^{+-l} + (P + R) e^{-+l}] with P - R = tau^2 / (P + R),
which stays accurate near the null cone P = |tau|. Every quotient by R
is written through shc and sinc, so the kernels are finite at R = 0.
"""

import math

import numpy as np

TWO_PI = 2.0 * math.pi


def _shc(x: np.ndarray) -> np.ndarray:
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 + x * x / 6.0, np.sinh(safe) / safe)


def _parts(ell, P, tau, alpha):
    ell, P, tau = np.broadcast_arrays(
        np.asarray(ell, dtype=float), np.asarray(P, dtype=float), np.asarray(tau, dtype=float)
    )
    c, s = math.cos(alpha), math.sin(alpha)
    R = np.sqrt(np.maximum(P * P - tau * tau, 0.0))
    plus = P + R
    minus = np.where(plus > 0, tau * tau / np.where(plus > 0, plus, 1.0), 0.0)
    e_up, e_down = np.exp(ell), np.exp(-ell)
    ch, sh = np.cosh(ell), np.sinh(ell)

    exp_plus = np.exp(-math.pi * c * (minus * e_up + plus * e_down))
    exp_minus = np.exp(-math.pi * c * (plus * e_up + minus * e_down))
    Ec = 0.5 * (exp_plus + exp_minus)
    Es = 0.5 * (exp_plus - exp_minus)

    x = TWO_PI * c * R * sh
    y = TWO_PI * s * R * ch
    z = TWO_PI * s * P * sh
    big = np.abs(x) >= 1.0
    safe_R = np.where(big, R, 1.0)
    Es_R = np.where(big, Es / safe_R, np.exp(-TWO_PI * c * P * ch) * TWO_PI * c * sh * _shc(x))
    sy_R = TWO_PI * s * ch * np.sinc(y / math.pi)
    return dict(P=P, ch=ch, sh=sh, c=c, s=s, Ec=Ec, Es=Es, Es_R=Es_R, sy_R=sy_R, y=y, z=z)


def kernel(ell, P, tau, alpha: float) -> np.ndarray:
    """S(l; P, tau), broadcasting over all array arguments."""
    p = _parts(ell, P, tau, alpha)
    return p["Ec"] * np.cos(p["y"]) * np.cos(p["z"]) + p["Es"] * np.sin(p["y"]) * np.sin(p["z"])


def kernel_with_derivative(ell, P, tau, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """S and its P-derivative at fixed tau."""
    p = _parts(ell, P, tau, alpha)
    c, s, ch, sh = p["c"], p["s"], p["ch"], p["sh"]
    Ec, Es, Es_R, sy_R = p["Ec"], p["Es"], p["Es_R"], p["sy_R"]
    cy, sy, cz, sz = np.cos(p["y"]), np.sin(p["y"]), np.cos(p["z"]), np.sin(p["z"])

    S = Ec * cy * cz + Es * sy * sz
    S_P = (
        -TWO_PI * c * ch * S
        + TWO_PI * s * sh * (Es * sy * cz - Ec * cy * sz)
        + p["P"]
        * (
            TWO_PI * c * sh * (Es_R * cy * cz + Ec * sy_R * sz)
            - TWO_PI * s * ch * (Ec * sy_R * cz - Es_R * cy * sz)
        )
    )
    return S, S_P


def log_amplitude(ell, P, tau, alpha: float) -> np.ndarray:
    """log of the dominant exponential e^{-2 pi c (P ch - R sh)} for l >= 0."""
    ell, P, tau = np.broadcast_arrays(
        np.asarray(ell, dtype=float), np.asarray(P, dtype=float), np.asarray(tau, dtype=float)
    )
    R = np.sqrt(np.maximum(P * P - tau * tau, 0.0))
    plus = P + R
    minus = np.where(plus > 0, tau * tau / np.where(plus > 0, plus, 1.0), 0.0)
    return -math.pi * math.cos(alpha) * (minus * np.exp(ell) + plus * np.exp(-ell))


def slow_phase_rate(ell, P, tau, alpha: float) -> np.ndarray:
    """|d/dl| of the phase 2 pi s (R ch - P sh) carried by the dominant exponential."""
    ell, P, tau = np.broadcast_arrays(
        np.asarray(ell, dtype=float), np.asarray(P, dtype=float), np.asarray(tau, dtype=float)
    )
    R = np.sqrt(np.maximum(P * P - tau * tau, 0.0))
    return TWO_PI * math.sin(alpha) * np.abs(R * np.sinh(ell) - P * np.cosh(ell))
