import numpy as np
import pytest

from cartanlab.cartan import curvature, make_principal_cartan
from cartanlab.errors import DimensionMismatch, SubgroupViolation
from cartanlab.extension import (CARTAN, NOT_APPLICABLE, NOT_CARTAN, ExtendedModel, equivariant_form,
                                 q_flat_connection, q_flat_form, q_flat_form_inverse, q_flat_inverse,
                                 quotient_residual, restrict_connection)
from cartanlab.forms import FormField
from cartanlab.lie_core import adjoint_rep, preset
from cartanlab.matrix_group import GroupChart
from cartanlab.poly import Poly, PolyMatrix

SOLDER = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])


def so2_in_sl2(base_dim=2):
    return ExtendedModel.build(GroupChart(*preset("sl2")), GroupChart(*preset("so2")), base_dim)


def random_inner(ext, seed, constant=SOLDER):
    m = ext.base_dim
    A = PolyMatrix.random((3, m), m, 2, np.random.default_rng(seed), scale=0.5)
    return make_principal_cartan(ext.inner, A + PolyMatrix.constant(constant, m))


def test_inclusion_of_so2_in_sl2():
    np.testing.assert_allclose(so2_in_sl2().inclusion[:, 0], [0, -1, 1])


def test_extension_to_the_same_group_is_the_identity():
    ext = ExtendedModel.build(GroupChart(*preset("so3")), GroupChart(*preset("so3")), 1)
    A = PolyMatrix.random((3, 1), 1, 2, np.random.default_rng(0))
    conn = make_principal_cartan(ext.inner, A)
    omega = q_flat_connection(conn, ext)
    pts = ext.inner.sample(8)
    np.testing.assert_allclose(omega.matrix(pts), conn.matrix(pts), atol=1e-12)


def test_connection_round_trips():
    ext = so2_in_sl2()
    conn = random_inner(ext, 1)
    omega = q_flat_connection(conn, ext)
    inner, outer = ext.inner.sample(10, 1), ext.outer.sample(10, 2)
    np.testing.assert_allclose(q_flat_inverse(omega, ext).matrix(inner), conn.matrix(inner), atol=1e-12)
    again = q_flat_connection(q_flat_inverse(omega, ext), ext)
    np.testing.assert_allclose(again.matrix(outer), omega.matrix(outer), atol=1e-12)


def test_quotient_is_well_defined():
    ext = so2_in_sl2()
    conn = random_inner(ext, 2)
    pts = ext.inner.sample(8, 3)
    res = quotient_residual(conn, ext, pts, ext.inner.sample_structure(3, 4), ext.outer.sample_structure(3, 5))
    assert res < 1e-9


def test_form_round_trip_and_curvature_correspondence():
    ext = so2_in_sl2()
    conn = random_inner(ext, 3)
    ad = adjoint_rep(ext.h)
    rng = np.random.default_rng(3)
    beta = FormField.from_poly({(k, (i,)): Poly.random(2, 2, rng) for k in range(3) for i in range(2)}, 1, 2, 3)
    psi = equivariant_form(ext.inner, beta, ext.inner.g_adjoint_generators())
    inner, outer = ext.inner.sample(8, 6), ext.outer.sample(8, 7)
    q_psi = q_flat_form(psi, ext, ad, inner=conn)
    np.testing.assert_allclose(q_flat_form_inverse(q_psi, ext).components(inner), psi.components(inner), atol=1e-12)
    omega = q_flat_connection(conn, ext)
    qK = q_flat_form(curvature(conn), ext, ad, inner=conn).components(outer)
    np.testing.assert_allclose(qK, curvature(omega).components(outer), atol=1e-8)


def test_restriction_verdicts():
    ext = so2_in_sl2()
    good = restrict_connection(q_flat_connection(random_inner(ext, 4), ext), ext)
    assert good.verdict == CARTAN and set(good.intersection_dims) == {0}
    bad = make_principal_cartan(ext.inner, np.zeros((3, 2)))
    report = restrict_connection(q_flat_connection(bad, ext), ext)
    assert report.verdict == NOT_CARTAN and set(report.intersection_dims) == {2}
    line = so2_in_sl2(1)
    report = restrict_connection(q_flat_connection(random_inner(line, 5, SOLDER[:, :1]), line), line)
    assert report.verdict == NOT_APPLICABLE and not report.dims_match


def test_build_rejects_non_subgroups():
    with pytest.raises(SubgroupViolation):
        ExtendedModel.build(GroupChart(*preset("borel")), GroupChart(*preset("so2")), 1)
    with pytest.raises(DimensionMismatch):
        ExtendedModel.build(GroupChart(*preset("sl2")), GroupChart(*preset("so3")), 1)
