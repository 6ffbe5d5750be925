"""
Value types for 2x2 matrix arithmetic over the split Eichler order.

TailoredMatrix keeps exact rational entries; GroupElement keeps a float
matrix of SL2(R) together with an exact rational form when one exists,
so that conjugating lattice data by diagonal or unipotent elements with
rational parameters stays exact.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np
import sympy
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.core.exceptions import ValidationError

Entries = tuple[Fraction, Fraction, Fraction, Fraction]


def as_fraction(value) -> Fraction:
    """Exact rational from int, Fraction, float (binary value) or str."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value.strip())
    return Fraction(value)


def rational_sqrt(value: Fraction) -> Optional[Fraction]:
    """Exact square root of a nonnegative rational, or None if irrational."""
    if value < 0:
        return None
    num_root = math.isqrt(value.numerator)
    den_root = math.isqrt(value.denominator)
    if num_root * num_root == value.numerator and den_root * den_root == value.denominator:
        return Fraction(num_root, den_root)
    return None


@dataclass(frozen=True)
class TailoredMatrix:
    """
    Exact 2x2 matrix read in tailored coordinates [a,b,c]+d.

    [a,b,c]+d = [[d+c, b+a], [b-a, d-c]], so a=(m12-m21)/2, b=(m12+m21)/2,
    c=(m11-m22)/2, d=(m11+m22)/2.
    """

    m11: Fraction
    m12: Fraction
    m21: Fraction
    m22: Fraction

    @classmethod
    def from_entries(cls, m11, m12, m21, m22) -> "TailoredMatrix":
        return cls(as_fraction(m11), as_fraction(m12), as_fraction(m21), as_fraction(m22))

    @classmethod
    def from_tailored(cls, a, b, c, d) -> "TailoredMatrix":
        a, b, c, d = (as_fraction(v) for v in (a, b, c, d))
        return cls(d + c, b + a, b - a, d - c)

    @classmethod
    def identity(cls) -> "TailoredMatrix":
        return cls.from_entries(1, 0, 0, 1)

    @property
    def entries(self) -> Entries:
        return (self.m11, self.m12, self.m21, self.m22)

    @property
    def a(self) -> Fraction:
        return (self.m12 - self.m21) / 2

    @property
    def b(self) -> Fraction:
        return (self.m12 + self.m21) / 2

    @property
    def c(self) -> Fraction:
        return (self.m11 - self.m22) / 2

    @property
    def d(self) -> Fraction:
        return (self.m11 + self.m22) / 2

    @property
    def tailored(self) -> Entries:
        return (self.a, self.b, self.c, self.d)

    @property
    def norm(self) -> Fraction:
        """P = a^2+b^2+c^2+d^2 = (sum of squared entries)/2."""
        return (self.m11**2 + self.m12**2 + self.m21**2 + self.m22**2) / 2

    @property
    def det(self) -> Fraction:
        return self.m11 * self.m22 - self.m12 * self.m21

    @property
    def trace(self) -> Fraction:
        return self.m11 + self.m22

    @property
    def rotation_part(self) -> Fraction:
        """b^2 + c^2."""
        return self.b**2 + self.c**2

    @property
    def dilation_part(self) -> Fraction:
        """a^2 + d^2."""
        return self.a**2 + self.d**2

    @property
    def diamond(self) -> Fraction:
        return self.norm**2 - self.det**2

    @property
    def diamond_product(self) -> Fraction:
        """4(a^2+d^2)(b^2+c^2), the factored form of P^2 - tau^2."""
        return 4 * self.dilation_part * self.rotation_part

    def is_zero(self) -> bool:
        return not any(self.entries)

    def __matmul__(self, other: "TailoredMatrix") -> "TailoredMatrix":
        return TailoredMatrix(
            self.m11 * other.m11 + self.m12 * other.m21,
            self.m11 * other.m12 + self.m12 * other.m22,
            self.m21 * other.m11 + self.m22 * other.m21,
            self.m21 * other.m12 + self.m22 * other.m22,
        )

    def __add__(self, other: "TailoredMatrix") -> "TailoredMatrix":
        return TailoredMatrix(*(x + y for x, y in zip(self.entries, other.entries)))

    def scale(self, factor) -> "TailoredMatrix":
        factor = as_fraction(factor)
        return TailoredMatrix(*(factor * x for x in self.entries))

    def to_array(self) -> np.ndarray:
        return np.array([[float(self.m11), float(self.m12)], [float(self.m21), float(self.m22)]])


@dataclass(frozen=True)
class HalfPlanePoint:
    """A point z = x + iy of the upper half-plane."""

    x: float
    y: float

    def __post_init__(self):
        if not (self.y > 0 and math.isfinite(self.y) and math.isfinite(self.x)):
            raise ValidationError("Point must lie in the upper half-plane", field="y", value=self.y)

    @classmethod
    def from_complex(cls, z: complex) -> "HalfPlanePoint":
        return cls(float(z.real), float(z.imag))

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)


@dataclass(frozen=True)
class GroupElement:
    """
    Element g of SL2(R), entries row-major (p, q, r, s).

    `exact` holds the same matrix as Fractions when all entries are
    rational; `label` is the canonical descriptor used in reports and
    accepted back by `GroupElement.parse`.
    """

    entries: tuple[float, float, float, float]
    exact: Optional[Entries] = None
    label: str = ""

    def __post_init__(self):
        p, q, r, s = self.entries
        if abs(p * s - q * r - 1.0) > 1e-12 * max(1.0, abs(p * s), abs(q * r)):
            raise ValidationError("Group element must have determinant 1", field="g", value=self.entries)
        if self.exact is not None:
            ep, eq, er, es = self.exact
            if ep * es - eq * er != 1:
                raise ValidationError("Exact group element must have determinant 1", field="g")

    # ----- constructors -------------------------------------------------

    @classmethod
    def identity(cls) -> "GroupElement":
        one, zero = Fraction(1), Fraction(0)
        return cls((1.0, 0.0, 0.0, 1.0), (one, zero, zero, one), "I")

    @classmethod
    def from_exact(cls, p, q, r, s, label: str = "") -> "GroupElement":
        exact = tuple(as_fraction(v) for v in (p, q, r, s))
        return cls(tuple(float(v) for v in exact), exact, label or "matrix:" + ":".join(str(v) for v in exact))

    @classmethod
    def diagonal(cls, y) -> "GroupElement":
        """a(y) = diag(y^1/2, y^-1/2), so that g.i = iy."""
        y_exact = as_fraction(y)
        if y_exact <= 0:
            raise ValidationError("y must be positive", field="y", value=y)
        label = f"diag:{y}"
        root = rational_sqrt(y_exact)
        if root is not None:
            return cls((float(root), 0.0, 0.0, float(1 / root)), (root, Fraction(0), Fraction(0), 1 / root), label)
        sy = math.sqrt(float(y))
        return cls((sy, 0.0, 0.0, 1.0 / sy), None, label)

    @classmethod
    def upper(cls, x, y) -> "GroupElement":
        """n(x)a(y), so that g.i = x + iy."""
        x_exact, y_exact = as_fraction(x), as_fraction(y)
        if y_exact <= 0:
            raise ValidationError("y must be positive", field="y", value=y)
        label = f"upper:{x}:{y}"
        root = rational_sqrt(y_exact)
        if root is not None:
            exact = (root, x_exact / root, Fraction(0), 1 / root)
            return cls(tuple(float(v) for v in exact), exact, label)
        sy = math.sqrt(float(y))
        return cls((sy, float(x) / sy, 0.0, 1.0 / sy), None, label)

    @classmethod
    def from_iwasawa(cls, x: float, y: float, theta: float) -> "GroupElement":
        """g = n(x) a(y) k(theta) with k(theta) = [[cos, -sin], [sin, cos]]."""
        if y <= 0:
            raise ValidationError("y must be positive", field="y", value=y)
        sy = math.sqrt(y)
        ct, st = math.cos(theta), math.sin(theta)
        na = np.array([[sy, x / sy], [0.0, 1.0 / sy]])
        k = np.array([[ct, -st], [st, ct]])
        g = na @ k
        return cls(tuple(float(v) for v in g.ravel()), None, f"iwasawa:{x}:{y}:{theta}")

    @classmethod
    def parse(cls, text: str) -> "GroupElement":
        """
        Parse a descriptor: "I", "diag:<y>", "upper:<x>:<y>",
        "iwasawa:<x>:<y>:<theta>" or "matrix:<p>:<q>:<r>:<s>".
        """
        parts = [p.strip() for p in text.strip().split(":")]
        kind = parts[0].lower()
        try:
            if kind in ("i", "identity") and len(parts) == 1:
                return cls.identity()
            if kind == "diag" and len(parts) == 2:
                return cls.diagonal(_parse_number(parts[1]))
            if kind == "upper" and len(parts) == 3:
                return cls.upper(_parse_number(parts[1]), _parse_number(parts[2]))
            if kind == "iwasawa" and len(parts) == 4:
                return cls.from_iwasawa(float(parts[1]), float(parts[2]), float(parts[3]))
            if kind == "matrix" and len(parts) == 5:
                return cls.from_exact(*(as_fraction(p) for p in parts[1:]))
        except (ValueError, ZeroDivisionError) as e:
            raise ValidationError(f"Invalid group element '{text}': {e}", field="g", value=text) from e
        raise ValidationError(f"Unknown group element descriptor '{text}'", field="g", value=text)

    # ----- accessors ----------------------------------------------------

    @property
    def is_exact(self) -> bool:
        return self.exact is not None

    def matrix(self) -> np.ndarray:
        return np.array(self.entries, dtype=float).reshape(2, 2)

    def inverse_exact(self) -> Optional[Entries]:
        if self.exact is None:
            return None
        p, q, r, s = self.exact
        return (s, -q, -r, p)

    def point(self) -> HalfPlanePoint:
        """z = g.i."""
        p, q, r, s = self.entries
        z = (p * 1j + q) / (r * 1j + s)
        return HalfPlanePoint.from_complex(z)

    def iwasawa(self) -> tuple[float, float, float]:
        """Recover (x, y, theta) with g = n(x) a(y) k(theta)."""
        z = self.point()
        sy = math.sqrt(z.y)
        na_inv = np.array([[1.0 / sy, -z.x / sy], [0.0, sy]])
        k = na_inv @ self.matrix()
        return z.x, z.y, math.atan2(k[1, 0], k[0, 0])

    def left_multiply(self, other: "GroupElement") -> "GroupElement":
        """other * self."""
        product = other.matrix() @ self.matrix()
        exact = None
        if self.exact is not None and other.exact is not None:
            exact = _mul_entries(other.exact, self.exact)
        label = f"{other.label}*{self.label}"
        return GroupElement(tuple(float(v) for v in product.ravel()), exact, label)


def _parse_number(text: str):
    """Fraction for rational literals ("4", "1/2", "0.25"), float otherwise."""
    try:
        return Fraction(text)
    except ValueError:
        return float(text)


def _mul_entries(x: Entries, y: Entries) -> Entries:
    return (
        x[0] * y[0] + x[1] * y[2],
        x[0] * y[1] + x[1] * y[3],
        x[2] * y[0] + x[3] * y[2],
        x[2] * y[1] + x[3] * y[3],
    )


class LatticeSpec(BaseModel):
    """
    The partially dualised split Eichler order R(l) of level N, conjugated
    by g: R(l;g) = g^-1 R(l) g.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    N: int = Field(..., ge=1, description="Squarefree level")
    ell: int = Field(default=1, ge=1, description="Positive divisor of N")
    g: GroupElement = Field(default_factory=GroupElement.identity, description="Conjugator")

    @model_validator(mode="after")
    def check_level(self) -> "LatticeSpec":
        if not is_squarefree(self.N):
            raise ValidationError(f"Level N={self.N} is not squarefree", field="N", value=self.N)
        if self.N % self.ell != 0:
            raise ValidationError(f"ell={self.ell} does not divide N={self.N}", field="ell", value=self.ell)
        return self

    def with_g(self, g: GroupElement) -> "LatticeSpec":
        return LatticeSpec(N=self.N, ell=self.ell, g=g)

    @property
    def descriptor(self) -> str:
        return f"N={self.N},ell={self.ell},g={self.g.label}"


def is_squarefree(n: int) -> bool:
    """True when no prime square divides n (n >= 1)."""
    if n < 1:
        return False
    return all(e == 1 for e in sympy.factorint(n).values())


@dataclass(frozen=True)
class MatrixInvariants:
    """P, tau, diamond and (when tau != 0) u of a matrix."""

    P: Fraction
    tau: Fraction
    diamond: Fraction
    u: Optional[Fraction]


@dataclass(frozen=True)
class HeightResult:
    """Height H(z) with an integral witness W in A_0(N), H = Im(W.z)."""

    H: float
    witness: tuple[int, int, int, int]
    image: HalfPlanePoint
    steps: int


@dataclass(frozen=True)
class LatticeBasis:
    """
    Ordered basis of R(l;g) (or of a sublattice), given in original
    coordinates, with the Gram matrix of P after conjugation by g.
    """

    vectors: tuple[TailoredMatrix, ...]
    gram: np.ndarray
    gram_exact: Optional[tuple[tuple[Fraction, ...], ...]]
    covolume: Fraction
    conjugated: tuple[tuple[float, float, float, float], ...]
    conjugated_exact: Optional[tuple[TailoredMatrix, ...]]

    @property
    def rank(self) -> int:
        return len(self.vectors)
