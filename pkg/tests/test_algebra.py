import math
from fractions import Fraction

import numpy as np
import pytest

from src.core.exceptions import ValidationError
from src.modules.algebra.schemas import GroupElement, HalfPlanePoint, LatticeSpec, TailoredMatrix, is_squarefree
from src.modules.algebra.service import (
    act,
    atkin_lehner,
    combine,
    conjugate,
    covolume_gamma0,
    divisors,
    group_height,
    height,
    hyperbolic_u,
    invariants,
    lattice_basis,
    spacing_defects,
    tailored_invariants,
    trace_free_basis,
)


def test_tailored_coordinates_match_entries():
    gamma = TailoredMatrix.from_tailored(1, 0, 0, 0)
    assert gamma.entries == (0, 1, -1, 0)
    assert gamma.norm == 1
    assert gamma.det == 1
    P, tau = tailored_invariants(1.0, 0.0, 0.0, 0.0)
    assert (P, tau) == (1.0, 1.0)


def test_diamond_factors_into_rotation_and_dilation():
    gamma = TailoredMatrix.from_entries(1, 2, 3, 4)
    assert gamma.norm == 15
    assert gamma.det == -2
    assert gamma.diamond == 221
    assert gamma.diamond_product == gamma.diamond


def test_invariants_u_and_null_locus():
    inv = invariants(TailoredMatrix.from_entries(1, 2, 3, 4))
    assert inv.u == Fraction(13, 4)
    assert invariants(TailoredMatrix.from_entries(1, 0, 0, 0)).u is None


def test_hyperbolic_u_and_action():
    assert hyperbolic_u(HalfPlanePoint(0.0, 1.0), HalfPlanePoint(0.0, 2.0)) == pytest.approx(1 / 8)
    moved = act((1, 1, 0, 1), HalfPlanePoint(0.0, 1.0))
    assert (moved.x, moved.y) == pytest.approx((1.0, 1.0))
    with pytest.raises(ValidationError):
        act((0, 1, 1, 0), HalfPlanePoint(0.0, 1.0))


def test_half_plane_point_rejects_lower_half():
    with pytest.raises(ValidationError):
        HalfPlanePoint(0.0, -1.0)


def test_exact_conjugation_by_diagonal():
    gamma = TailoredMatrix.from_entries(1, 2, 3, 4)
    conj = conjugate(gamma, GroupElement.parse("diag:4"))
    assert conj.entries == (1, Fraction(1, 2), 12, 4)
    assert conj.det == gamma.det


def test_irrational_conjugation_is_float_and_keeps_det():
    g = GroupElement.parse("diag:2")
    assert not g.is_exact
    m11, m12, m21, m22 = conjugate(TailoredMatrix.from_entries(1, 2, 3, 4), g)
    assert m11 * m22 - m12 * m21 == pytest.approx(-2.0)
    assert m12 == pytest.approx(1.0)


@pytest.mark.parametrize(
    "text, point",
    [
        ("I", (0.0, 1.0)),
        ("diag:4", (0.0, 4.0)),
        ("upper:1/2:2", (0.5, 2.0)),
        ("matrix:1:1:0:1", (1.0, 1.0)),
    ],
)
def test_parse_group_elements(text, point):
    z = GroupElement.parse(text).point()
    assert (z.x, z.y) == pytest.approx(point)


@pytest.mark.parametrize("text", ["foo", "diag", "diag:-1", "matrix:1:2:3:4", "upper:x:1"])
def test_parse_rejects_bad_descriptors(text):
    with pytest.raises(ValidationError):
        GroupElement.parse(text)


def test_iwasawa_coordinates_recovered():
    g = GroupElement.from_iwasawa(0.3, 1.7, 0.4)
    assert g.iwasawa() == pytest.approx((0.3, 1.7, 0.4))


def test_group_element_needs_unit_determinant():
    with pytest.raises(ValidationError):
        GroupElement((2.0, 0.0, 0.0, 1.0))


def test_lattice_spec_validation():
    assert LatticeSpec(N=6, ell=2).descriptor == "N=6,ell=2,g=I"
    with pytest.raises(ValidationError):
        LatticeSpec(N=4)
    with pytest.raises(ValidationError):
        LatticeSpec(N=6, ell=4)


def test_squarefree_and_divisors():
    assert [n for n in range(0, 13) if is_squarefree(n)] == [1, 2, 3, 5, 6, 7, 10, 11]
    assert divisors(6) == [1, 2, 3, 6]


def test_covolume_gamma0():
    assert covolume_gamma0(1) == pytest.approx(math.pi / 3)
    assert covolume_gamma0(6) == pytest.approx(4 * math.pi)
    with pytest.raises(ValidationError):
        covolume_gamma0(4)


@pytest.mark.parametrize("N, Q, gamma_entry, delta_entry", [(6, 2, 1, 1), (6, 3, 1, 1), (10, 5, 1, 1), (6, 6, 1, 1)])
def test_atkin_lehner_shape(N, Q, gamma_entry, delta_entry):
    m11, m12, m21, m22 = atkin_lehner(N, Q, gamma_entry, delta_entry)
    assert m11 * m22 - m12 * m21 == Q
    assert m11 % Q == 0 and m22 % Q == 0 and m21 % N == 0


def test_atkin_lehner_needs_exact_divisor():
    with pytest.raises(ValidationError):
        atkin_lehner(6, 4, 1, 1)


def test_height_of_reduced_point():
    result = height(HalfPlanePoint(0.0, 1.0), 1)
    assert result.H == pytest.approx(1.0)
    assert group_height(GroupElement.identity(), 1) == pytest.approx(1.0)


def test_height_moves_low_point_up():
    z = HalfPlanePoint(0.0, 0.1)
    result = height(z, 1)
    assert result.H == pytest.approx(10.0, rel=1e-12)
    p, q, r, s = result.witness
    assert p * s - q * r == 1
    w = (p * z.z + q) / (r * z.z + s)
    assert w.imag == pytest.approx(result.H)


@pytest.mark.parametrize("N", [2, 3, 6])
def test_height_maximal_points_satisfy_spacing(N):
    rng = np.random.default_rng(7)
    for x, y in zip(rng.uniform(-1, 1, 20), rng.uniform(0.01, 1.0, 20)):
        result = height(HalfPlanePoint(float(x), float(y)), N)
        assert result.H >= y * (1 - 1e-12)
        height_slack, norm_slack = spacing_defects(result.image, N)
        assert height_slack >= -1e-12
        assert norm_slack >= -1e-12


def test_height_rejects_non_squarefree():
    with pytest.raises(ValidationError):
        height(HalfPlanePoint(0.0, 1.0), 12)


def test_lattice_basis_covolume_and_gram():
    basis = lattice_basis(LatticeSpec(N=6, ell=2))
    assert basis.rank == 4
    assert basis.covolume == Fraction(3, 2)
    identity_basis = lattice_basis(LatticeSpec(N=1))
    assert np.allclose(identity_basis.gram, 0.5 * np.eye(4))
    assert identity_basis.gram_exact[0][0] == Fraction(1, 2)


def test_trace_free_basis_members_are_trace_free():
    basis = trace_free_basis(LatticeSpec(N=3))
    assert basis.rank == 3
    assert all(v.trace == 0 for v in basis.vectors)


def test_combine_builds_member():
    basis = lattice_basis(LatticeSpec(N=1))
    assert combine(basis, [1, 2, 0, 1]).entries == (1, 2, 0, 1)
