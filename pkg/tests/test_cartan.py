import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from cartanlab.cartan import (CartanConnection, LocalModel, bianchi_residual, bracket_axiom_residual,
                              bracket_defect_residual, covariant_derivative, curvature, curvature_function,
                              curvature_residual, equivariance_residual, make_principal_cartan, maurer_cartan,
                              reductive_split, reproduction_residual, validate)
from cartanlab.checks import PASS
from cartanlab.errors import DimensionMismatch, NotHorizontal, NotReductive, SingularCoframe
from cartanlab.lie_core import SubalgebraEmbedding, adjoint_rep, preset
from cartanlab.matrix_group import GroupChart
from cartanlab.poly import PolyMatrix

seeds = st.integers(0, 2**16)
SOLDER = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
# finite-difference brackets of ζ lose accuracy where the coframe is close to singular
MAX_COFRAME_COND = 1e3


def group_model(name, sub=None, complement=None):
    h, rep = preset(name)
    emb = None if sub is None else SubalgebraEmbedding.from_indices(h, sub, complement)
    return LocalModel.group(GroupChart(h, rep), emb)


def e2_model():
    e2, _ = preset("e2")
    so2, rep = preset("so2")
    return LocalModel.principal(e2, GroupChart(so2, rep), np.eye(3)[:, [0]], 2)


def random_e2_connection(seed, scale=0.5):
    model = e2_model()
    A = PolyMatrix.random((3, 2), 2, 2, np.random.default_rng(seed), scale=scale)
    return make_principal_cartan(model, A + PolyMatrix.constant(SOLDER, 2))


def all_pass(checks):
    bad = [(c.name, c.residual) for c in checks if c.tolerance is not None and c.verdict != PASS]
    assert not bad, bad


@pytest.mark.parametrize("name", ["so3", "sl2", "heis3", "e2"])
def test_maurer_cartan_is_flat_and_valid(name):
    conn = maurer_cartan(GroupChart(*preset(name)))
    pts = conn.sample(16, 1)
    assert curvature_residual(conn, pts) < 1e-10
    all_pass(validate(conn, pts, flat=True))


def test_group_model_with_borel_structure():
    model = group_model("sl2", [0, 1])
    conn = make_principal_cartan(model)
    pts = conn.sample(16, 2)
    elements = model.sample_structure(4, 3)
    assert equivariance_residual(conn, pts, elements) < 1e-9
    all_pass(validate(conn, pts, elements, flat=True))


@settings(max_examples=8, deadline=None)
@given(seeds)
def test_random_principal_connection_validates(seed):
    conn = random_e2_connection(seed)
    assert isinstance(conn, CartanConnection)
    pts = conn.sample(12, seed)
    assume(np.linalg.cond(conn.matrix(pts)).max() < MAX_COFRAME_COND)
    all_pass(validate(conn, pts))


@settings(max_examples=8, deadline=None)
@given(seeds)
def test_zeta_inverts_kappa_and_is_linear(seed):
    conn = random_e2_connection(seed)
    rng = np.random.default_rng(seed)
    pts = conn.sample(6, seed)
    X, Y = rng.normal(size=(2, 3))
    zx = conn.zeta(X, pts)
    np.testing.assert_allclose(conn.kappa(pts, zx), np.broadcast_to(X, (6, 3)), atol=1e-10)
    np.testing.assert_allclose(conn.zeta(2 * X - Y, pts), 2 * zx - conn.zeta(Y, pts), atol=1e-10)
    # on g the inverse is the fundamental field
    np.testing.assert_allclose(conn.zeta([1.0, 0, 0], pts), conn.fundamental([1.0], pts), atol=1e-10)


def test_constant_soldering_is_the_flat_model():
    conn = make_principal_cartan(e2_model(), SOLDER)
    assert curvature_residual(conn, conn.sample(16, 0)) < 1e-12


def test_constant_base_form_curvature_equals_bracket():
    """For constant A the curvature at the identity fiber is [A e1, A e2]."""
    e2, _ = preset("e2")
    A = np.array([[0.3, -0.7], [1.0, 0.2], [0.1, 1.0]])
    conn = make_principal_cartan(e2_model(), A)
    K = curvature(conn)
    np.testing.assert_allclose(K.components(np.zeros(3))[:, 0], e2.bracket(A[:, 0], A[:, 1]), atol=1e-12)
    # both legs inside the base: fiber components vanish
    np.testing.assert_allclose(K.components(np.zeros(3))[:, 1:], 0, atol=1e-12)


@settings(max_examples=5, deadline=None)
@given(seeds)
def test_bianchi_identity_and_covariant_derivative_of_curvature(seed):
    conn = random_e2_connection(seed)
    pts = conn.sample(8, seed)
    assert bianchi_residual(conn, pts) < 1e-9
    dK = covariant_derivative(conn, adjoint_rep(conn.h), curvature(conn), pts)
    assert np.abs(dK.components(pts)).max() < 1e-8


def test_covariant_derivative_rejects_vertical_forms():
    conn = random_e2_connection(1)
    with pytest.raises(NotHorizontal):
        covariant_derivative(conn, adjoint_rep(conn.h), conn.kappa)


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
def test_left_invariant_deformation_has_constant_curvature(a):
    """κ = L∘θ_MC on SO(3), L = diag(a, a, 1): k(e1, e2) = (1 − 1/a²) e3, other entries zero."""
    model = group_model("so3", [2])
    so3 = model.h
    L = np.diag([a, a, 1.0])
    conn = CartanConnection(model, maurer_cartan(model.fiber).kappa.linear(L, target=so3))
    pts = conn.sample(24, 4)
    kf = curvature_function(conn)
    assert kf.constancy_residual(pts) < 1e-9
    assert kf.antisymmetry_residual(pts) < 1e-12
    k = kf(pts[:1])[0]
    expected = np.zeros((3, 3, 3))
    expected[2, 0, 1], expected[2, 1, 0] = 1 - 1 / a**2, -(1 - 1 / a**2)
    np.testing.assert_allclose(k, expected, atol=1e-10)
    all_pass(validate(conn, pts))


def test_curvature_function_varies_for_generic_connection():
    conn = random_e2_connection(3, scale=1.0)
    assert curvature_function(conn).constancy_residual(conn.sample(24, 5)) > 1e-3


def test_bracket_identities_on_curved_connection():
    conn = random_e2_connection(7)
    pts = conn.sample(6, 7)
    assert bracket_axiom_residual(conn, pts) < 1e-6
    assert bracket_defect_residual(conn, pts) < 1e-5


def test_reductive_split_recombines():
    conn = random_e2_connection(9)
    V = np.eye(3)[:, 1:]
    theta, omega = reductive_split(conn, V)
    pts = conn.sample(8, 9)
    e2 = conn.h
    emb = conn.model.structure
    recombined = np.einsum("hg,...gn->...hn", emb.inclusion, omega.components(pts)) \
        + np.einsum("hv,...vn->...hn", V, theta.components(pts))
    np.testing.assert_allclose(recombined, conn.kappa.components(pts), atol=1e-12)
    assert e2.dim == theta.dim + omega.dim


def test_reductive_split_rejects_borel():
    h, rep = preset("sl2")
    model = group_model("sl2", [0, 1], complement=[2])
    conn = make_principal_cartan(model)
    with pytest.raises(NotReductive):
        reductive_split(conn)


def test_singular_coframe_and_shape_errors():
    conn = make_principal_cartan(e2_model(), np.zeros((3, 2)))
    with pytest.raises(SingularCoframe):
        conn.zeta([0, 1.0, 0], conn.sample(2))
    with pytest.raises(DimensionMismatch):
        make_principal_cartan(e2_model(), np.zeros((2, 2)))


def test_reproduction_on_group_model():
    model = group_model("so3", [2])
    conn = maurer_cartan(model.fiber, model.structure)
    assert reproduction_residual(conn, conn.sample(8)) < 1e-12
