import numpy as np
import pytest

from cartanlab.cartan import LocalModel, make_principal_cartan, maurer_cartan
from cartanlab.chern_weil import (check_invariant, chern_weil_form, closedness_residual, invariant_polynomial,
                                  transgression, transgression_residual)
from cartanlab.errors import ModelMismatch, NotInvariant
from cartanlab.lie_core import killing_multilinear, preset
from cartanlab.matrix_group import GroupChart
from cartanlab.poly import PolyMatrix

SOLDER5 = np.zeros((3, 5))
SOLDER5[1, 0] = SOLDER5[2, 1] = 1.0


def e2_model(base_dim):
    e2, _ = preset("e2")
    return LocalModel.principal(e2, GroupChart(*preset("so2")), np.eye(3)[:, [0]], base_dim)


def random_connection(model, seed, solder):
    A = PolyMatrix.random((3, model.base_dim), model.base_dim, 2, np.random.default_rng(seed), scale=0.5)
    return make_principal_cartan(model, A + PolyMatrix.constant(solder, model.base_dim))


def rotation_square():
    e2, _ = preset("e2")
    return invariant_polynomial(e2, "tensor", coeffs=np.diag([1.0, 0, 0]))


def test_rotation_square_is_invariant_and_translation_square_is_not():
    e2, _ = preset("e2")
    assert check_invariant(e2, rotation_square()) == 0
    with pytest.raises(NotInvariant):
        check_invariant(e2, invariant_polynomial(e2, "tensor", coeffs=np.diag([0, 1.0, 0])))


def test_trace_square_equals_killing_on_so3():
    so3, rep = preset("so3")
    np.testing.assert_allclose(invariant_polynomial(so3, "trace_power", 2, rep).coeffs,
                               killing_multilinear(so3).coeffs, atol=1e-14)


def test_flat_connection_has_vanishing_chern_weil_form():
    conn = maurer_cartan(GroupChart(*preset("so3")))
    form = chern_weil_form(killing_multilinear(conn.h), conn)
    assert form.degree == 4
    assert np.abs(form.components(conn.sample(4))).max(initial=0.0) == 0.0


def test_chern_weil_form_is_closed_and_transgresses():
    model = e2_model(5)
    f = rotation_square()
    c0, c1 = random_connection(model, 1, SOLDER5), random_connection(model, 2, SOLDER5)
    pts = model.sample(6, 3)
    form = chern_weil_form(f, c1)
    assert np.abs(form.components(pts)).max() > 1e-3
    assert closedness_residual(form, pts) < 1e-9
    assert transgression_residual(f, c0, c1, pts) < 1e-8


def test_transgression_quadrature_is_exact_at_arity_nodes():
    model = e2_model(5)
    f = rotation_square()
    c0, c1 = random_connection(model, 4, SOLDER5), random_connection(model, 5, SOLDER5)
    pts = model.sample(4, 6)
    np.testing.assert_allclose(transgression(f, c0, c1, nodes=2).components(pts),
                               transgression(f, c0, c1, nodes=8).components(pts), atol=1e-12)


def test_transgression_between_equal_connections_vanishes():
    model = e2_model(5)
    c = random_connection(model, 7, SOLDER5)
    assert np.abs(transgression(rotation_square(), c, c).components(model.sample(3))).max() == 0


def test_transgression_rejects_different_models():
    c0 = random_connection(e2_model(5), 1, SOLDER5)
    c1 = random_connection(e2_model(4), 1, SOLDER5[:, :4])
    with pytest.raises(ModelMismatch):
        transgression(rotation_square(), c0, c1)
