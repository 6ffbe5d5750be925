"""
Service layer for algebra module.

Exact invariants of tailored matrices, conjugation by SL2(R), the lattices
R(l;g), Atkin-Lehner matrices and the height function of a point under
the group A_0(N) generated by Gamma_0(N) and the Atkin-Lehner involutions.
"""

import math
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
import sympy
try:
    from sympy.core.intfunc import igcdex
except ImportError:  # sympy < 1.13
    from sympy.core.numbers import igcdex

from src.core.exceptions import ConvergenceError, ValidationError
from src.core.logging import get_logger

from .schemas import (
    GroupElement,
    HalfPlanePoint,
    HeightResult,
    LatticeBasis,
    LatticeSpec,
    MatrixInvariants,
    TailoredMatrix,
    is_squarefree,
)

logger = get_logger("algebra.service")

# Relative margin for a strict improvement of Im in the height search.
_HEIGHT_MARGIN = 1e-13
_MAX_HEIGHT_STEPS = 200


def invariants(gamma: TailoredMatrix) -> MatrixInvariants:
    """
    Exact P, tau, diamond and u of a matrix.

    u = (P - |tau|) / (2|tau|) is None on the null locus tau = 0.
    """
    P = gamma.norm
    tau = gamma.det
    diamond = P * P - tau * tau
    u = (P - abs(tau)) / (2 * abs(tau)) if tau != 0 else None
    return MatrixInvariants(P=P, tau=tau, diamond=diamond, u=u)


def tailored_invariants(a: float, b: float, c: float, d: float) -> tuple[float, float]:
    """Float (P, tau) for real tailored coordinates."""
    return a * a + b * b + c * c + d * d, a * a - b * b - c * c + d * d


def hyperbolic_u(z: HalfPlanePoint, w: HalfPlanePoint) -> float:
    """u(z, w) = |z - w|^2 / (4 Im z Im w)."""
    dx = z.x - w.x
    dy = z.y - w.y
    return (dx * dx + dy * dy) / (4.0 * z.y * w.y)


def act(matrix: Sequence[float], z: HalfPlanePoint) -> HalfPlanePoint:
    """Moebius action of a real 2x2 matrix (p, q, r, s) with positive determinant."""
    p, q, r, s = (float(v) for v in matrix)
    if p * s - q * r <= 0:
        raise ValidationError("Matrix must have positive determinant", field="matrix", value=matrix)
    w = (p * z.z + q) / (r * z.z + s)
    return HalfPlanePoint.from_complex(w)


def conjugate(gamma: TailoredMatrix, g: GroupElement) -> TailoredMatrix | tuple[float, float, float, float]:
    """
    g^-1 gamma g.

    Returns an exact TailoredMatrix when g has an exact rational form,
    otherwise a float tuple (m11, m12, m21, m22).
    """
    if g.exact is not None:
        p, q, r, s = g.exact
        g_mat = TailoredMatrix(p, q, r, s)
        g_inv = TailoredMatrix(s, -q, -r, p)
        return g_inv @ gamma @ g_mat
    g_arr = g.matrix()
    p, q, r, s = g.entries
    g_inv = np.array([[s, -q], [-r, p]])
    out = g_inv @ gamma.to_array() @ g_arr
    return tuple(float(v) for v in out.ravel())


def divisors(n: int) -> list[int]:
    return [int(v) for v in sympy.divisors(n)]


def _require_squarefree(N: int) -> None:
    if N < 1 or not is_squarefree(N):
        raise ValidationError(f"Level N={N} is not squarefree", field="N", value=N)


def covolume_gamma0(N: int) -> float:
    """Hyperbolic covolume (pi/3) N prod_{p | N} (1 + 1/p)."""
    _require_squarefree(N)
    index = Fraction(N)
    for p in sympy.primefactors(N):
        index *= Fraction(p + 1, p)
    return math.pi / 3.0 * float(index)


def atkin_lehner(N: int, Q: int, gamma_entry: int, delta_entry: int) -> tuple[int, int, int, int]:
    """
    Integral matrix [[Q alpha, beta], [N gamma, Q delta]] of determinant Q.

    Requires Q | N with gcd(Q, N/Q) = 1 and gcd(Q delta, (N/Q) gamma) = 1.
    """
    if N % Q != 0 or math.gcd(Q, N // Q) != 1:
        raise ValidationError(f"Q={Q} is not an exact divisor of N={N}", field="Q", value=Q)
    A = Q * delta_entry
    B = (N // Q) * gamma_entry
    x, y, g = igcdex(A, B)
    if abs(int(g)) != 1:
        raise ValidationError(
            "Bottom row is not coprime for the Atkin-Lehner coset",
            field="gamma_entry",
            value=(gamma_entry, delta_entry),
        )
    # x*A + y*B = g, so alpha = x/g and beta = -y/g give A*alpha - B*beta = 1
    alpha, beta = int(x) * int(g), -int(y) * int(g)
    return (Q * alpha, beta, N * gamma_entry, Q * delta_entry)


def _best_coset_move(z: complex, N: int, Q: int) -> Optional[tuple[float, int, int]]:
    """
    Best (|cz+d|^2 / Q, gamma, delta) over the coset W_Q Gamma_0(N).

    Im(W z) = Q y / |N gamma z + Q delta|^2, so an improvement needs
    |cz+d|^2 < Q. Returns None when no pair improves Im.
    """
    x, y = z.real, z.imag
    limit = Q / (1.0 + _HEIGHT_MARGIN)
    best: Optional[tuple[float, int, int]] = None
    max_gamma = int(math.floor(math.sqrt(limit) / (N * y))) + 1
    M = N // Q
    for gamma_entry in range(-max_gamma, max_gamma + 1):
        c = N * gamma_entry
        rest = limit - (c * y) ** 2
        if rest <= 0:
            continue
        radius = math.sqrt(rest)
        lo = math.ceil((-c * x - radius) / Q)
        hi = math.floor((-c * x + radius) / Q)
        for delta_entry in range(lo, hi + 1):
            if gamma_entry == 0 and delta_entry == 0:
                continue
            d = Q * delta_entry
            if math.gcd(d, M * gamma_entry) != 1:
                continue
            norm = (c * x + d) ** 2 + (c * y) ** 2
            if norm >= limit:
                continue
            # W_1 = identity up to sign is not a move
            if Q == 1 and gamma_entry == 0:
                continue
            key = norm / Q
            if best is None or key < best[0] - 1e-15 or (
                abs(key - best[0]) <= 1e-15 and (gamma_entry, delta_entry) < best[1:]
            ):
                best = (key, gamma_entry, delta_entry)
    return best


def _mat_mul(x: tuple[int, ...], y: tuple[int, ...]) -> tuple[int, int, int, int]:
    return (
        x[0] * y[0] + x[1] * y[2],
        x[0] * y[1] + x[1] * y[3],
        x[2] * y[0] + x[3] * y[2],
        x[2] * y[1] + x[3] * y[3],
    )


def _normalize(w: tuple[int, ...]) -> tuple[int, int, int, int]:
    g = math.gcd(*w)
    return tuple(v // g for v in w) if g > 1 else tuple(w)


def _moebius(w: Sequence[int], z: complex) -> complex:
    return (w[0] * z + w[1]) / (w[2] * z + w[3])


def height(z: HalfPlanePoint, N: int) -> HeightResult:
    """
    H(z) = max Im(gamma z) over gamma in A_0(N).

    Alternates translation into |x| <= 1/2, the Gamma_0(N) reduction
    (Q = 1) and the Atkin-Lehner cosets Q | N, Q > 1, each step taking
    the exhaustive best move of the coset. Stops at a fixpoint where no
    coset improves Im; the witness is the accumulated integral matrix.

    Raises:
        ValidationError: if N is not squarefree
        ConvergenceError: if no fixpoint is reached
    """
    _require_squarefree(N)
    witness: tuple[int, int, int, int] = (1, 0, 0, 1)
    current = z.z
    exact_divisors = divisors(N)

    for step in range(_MAX_HEIGHT_STEPS):
        shift = -math.floor(current.real + 0.5)
        if shift:
            translation = (1, shift, 0, 1)
            witness = _normalize(_mat_mul(translation, witness))
            current = current + shift

        best_move: Optional[tuple[float, int, int, int]] = None
        for Q in exact_divisors:
            move = _best_coset_move(current, N, Q)
            if move is not None and (best_move is None or move[0] < best_move[0]):
                best_move = (move[0], Q, move[1], move[2])

        if best_move is None:
            image = HalfPlanePoint.from_complex(_moebius(witness, z.z))
            logger.debug(
                "Height fixpoint reached",
                event="height_complete",
                N=N,
                steps=step,
                height=image.y,
            )
            return HeightResult(H=image.y, witness=witness, image=image, steps=step)

        _, Q, gamma_entry, delta_entry = best_move
        move_matrix = atkin_lehner(N, Q, gamma_entry, delta_entry)
        witness = _normalize(_mat_mul(move_matrix, witness))
        current = _moebius(move_matrix, current)

    raise ConvergenceError(
        f"Height reduction did not reach a fixpoint for z={z.z}, N={N}",
        operation="height",
        iterations=_MAX_HEIGHT_STEPS,
    )


def group_height(g: GroupElement, N: int) -> float:
    """H(g) := H(g.i)."""
    return height(g.point(), N).H


def spacing_defects(z: HalfPlanePoint, N: int, box: int = 50) -> tuple[float, float]:
    """
    Slack of the spacing estimates at a height-maximal point.

    Returns (Im z - sqrt(3)/(2N), min over integer (c, d) != 0 with N | c
    and |c|, |d| <= box of |cz+d|^2 - gcd(c, N)/N). Both are >= 0 up to
    rounding when z is height-maximal.
    """
    c = np.arange(-(box // N) * N, box + 1, N)
    d = np.arange(-box, box + 1)
    cc, dd = np.meshgrid(c, d, indexing="ij")
    mask = (cc != 0) | (dd != 0)
    norms = (cc * z.x + dd) ** 2 + (cc * z.y) ** 2
    gcds = np.gcd(cc, N)
    slack = norms - gcds / N
    return z.y - math.sqrt(3.0) / (2 * N), float(slack[mask].min())


def _standard_basis(spec: LatticeSpec) -> tuple[TailoredMatrix, ...]:
    N, ell = spec.N, spec.ell
    return (
        TailoredMatrix.from_entries(1, 0, 0, 0),
        TailoredMatrix.from_entries(0, Fraction(1, ell), 0, 0),
        TailoredMatrix.from_entries(0, 0, Fraction(N, ell), 0),
        TailoredMatrix.from_entries(0, 0, 0, 1),
    )


def _trace_free_basis(spec: LatticeSpec) -> tuple[TailoredMatrix, ...]:
    N, ell = spec.N, spec.ell
    return (
        TailoredMatrix.from_entries(1, 0, 0, -1),
        TailoredMatrix.from_entries(0, Fraction(1, ell), 0, 0),
        TailoredMatrix.from_entries(0, 0, Fraction(N, ell), 0),
    )


def _build_basis(vectors: tuple[TailoredMatrix, ...], g: GroupElement) -> LatticeBasis:
    conj = [conjugate(v, g) for v in vectors]
    exact = g.is_exact
    if exact:
        conj_exact = tuple(conj)
        conj_float = tuple(tuple(float(x) for x in m.entries) for m in conj_exact)
        gram_exact = tuple(
            tuple(sum((x * y for x, y in zip(u.entries, v.entries)), Fraction(0)) / 2 for v in conj_exact)
            for u in conj_exact
        )
        gram = np.array([[float(x) for x in row] for row in gram_exact])
    else:
        conj_exact = None
        conj_float = tuple(conj)
        arr = np.array(conj_float)
        gram = 0.5 * arr @ arr.T
        gram_exact = None

    entry_matrix = sympy.Matrix(
        [[sympy.Rational(x.numerator, x.denominator) for x in v.entries] for v in vectors]
    )
    if len(vectors) == 4:
        covolume = abs(Fraction(str(entry_matrix.det())))
    else:
        covolume = Fraction(str((entry_matrix * entry_matrix.T).det()))

    return LatticeBasis(
        vectors=vectors,
        gram=gram,
        gram_exact=gram_exact,
        covolume=covolume,
        conjugated=conj_float,
        conjugated_exact=conj_exact,
    )


def lattice_basis(spec: LatticeSpec) -> LatticeBasis:
    """
    Basis E11, E12/l, (N/l)E21, E22 of R(l) with the Gram matrix of
    P(g^-1 . g). The covolume in entry coordinates is N/l^2.
    """
    return _build_basis(_standard_basis(spec), spec.g)


def trace_free_basis(spec: LatticeSpec) -> LatticeBasis:
    """
    Basis E11-E22, E12/l, (N/l)E21 of the trace-free sublattice R(l)^0.

    For rank 3 the covolume field holds the Gram determinant of the
    entry vectors (the squared covolume in entry coordinates).
    """
    return _build_basis(_trace_free_basis(spec), spec.g)


def combine(basis: LatticeBasis, coefficients: Sequence[int]) -> TailoredMatrix:
    """Lattice member sum_i k_i v_i in original coordinates."""
    out = TailoredMatrix.from_entries(0, 0, 0, 0)
    for k, v in zip(coefficients, basis.vectors):
        if k:
            out = out + v.scale(int(k))
    return out
