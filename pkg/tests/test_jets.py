import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from cartanlab import taylor as T
from cartanlab.cartan import curvature_residual
from cartanlab.errors import DimensionMismatch, DimensionOverflow, SingularLinearPart
from cartanlab.jets import (JetElement, JetVectorField, ball_points, flat_model_connection, flow_residual,
                            g_infinity_truncated, group_axiom_residuals, jet_Ad, jet_bracket, jet_compose, jet_exp,
                            jet_invert, truncated_algebra, vf_bracket)
from cartanlab.lie_core import semidirect
from cartanlab.prolongation import LinearLieAlgebra

seeds = st.integers(0, 2**16)


def poly1(coeffs, k, cls=JetElement):
    """Jet on R^1 with x^d coefficient coeffs[d]."""
    c = np.zeros((k + 1, 1))
    c[: len(coeffs), 0] = coeffs
    return cls(1, k, c)


def test_compose_in_one_variable():
    a, b = poly1([0, 1, 1], 3), poly1([0, 2], 3)
    np.testing.assert_allclose(jet_compose(a, b).coeffs[:, 0], [0, 2, 4, 0])
    np.testing.assert_allclose(jet_compose(b, a).coeffs[:, 0], [0, 2, 2, 0])


def test_inverse_series():
    a = poly1([0, 1, 1], 3)
    np.testing.assert_allclose(jet_invert(a).coeffs[:, 0], [0, 1, -1, 2], atol=1e-14)
    with pytest.raises(SingularLinearPart):
        jet_invert(poly1([0, 0, 1], 3))


def test_exponential_examples():
    np.testing.assert_allclose(jet_exp(poly1([0, 1], 3, JetVectorField)).coeffs[:, 0], [0, np.e, 0, 0], rtol=1e-13)
    # x' = x² has flow x / (1 − t x) = x + x² + x³ + ...
    np.testing.assert_allclose(jet_exp(poly1([0, 0, 1], 3, JetVectorField)).coeffs[:, 0], [0, 1, 1, 1], atol=1e-13)
    with pytest.raises(DimensionMismatch):
        jet_exp(poly1([1.0], 3, JetVectorField))


def test_exp_of_linear_field_is_matrix_exponential():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(3, 3))
    E = jet_exp(JetVectorField.linear_field(A, 2))
    np.testing.assert_allclose(E.linear, scipy.linalg.expm(A), rtol=1e-12)
    assert np.abs(E.degree_part(2)).max() < 1e-14


def test_bracket_examples():
    rng = np.random.default_rng(1)
    A, B = rng.normal(size=(2, 2, 2))
    XA, XB = JetVectorField.linear_field(A, 2), JetVectorField.linear_field(B, 2)
    np.testing.assert_allclose(jet_bracket(XA, XB).linear, A @ B - B @ A, atol=1e-14)
    d = poly1([1.0], 2, JetVectorField)
    euler = poly1([0, 1.0], 2, JetVectorField)
    np.testing.assert_allclose(vf_bracket(d, euler).coeffs[:, 0], [1, 0, 0])
    np.testing.assert_allclose(jet_bracket(d, euler).coeffs[:, 0], [-1, 0, 0])


@settings(max_examples=10, deadline=None)
@given(seeds, st.sampled_from([(1, 3), (2, 2), (3, 2)]))
def test_group_axioms_and_adjoint_properties(seed, shape):
    res = group_axiom_residuals(*shape, seed=seed)
    assert max(res.values()) < 1e-11, res


def test_derivative_of_adjoint_action_is_the_lie_derivative():
    rng = np.random.default_rng(2)
    n, k = 2, 3
    size = T.basis(n, k).size
    cy, cx = rng.normal(scale=0.5, size=(2, size, n))
    cy[0] = 0.0
    Y, X = JetVectorField(n, k, cy), JetVectorField(n, k, cx)
    h = 1e-5
    fd = (jet_Ad(jet_exp(Y * h), X) - jet_Ad(jet_exp(Y * -h), X)) * (0.5 / h)
    np.testing.assert_allclose(fd.coeffs, vf_bracket(Y, X).coeffs, atol=1e-8)
    np.testing.assert_allclose(fd.coeffs, -jet_bracket(Y, X).coeffs, atol=1e-8)


@pytest.mark.parametrize("name,k,dim", [("so2", 1, 3), ("so3", 1, 6), ("co3", 2, 10), ("gl2", 1, 6)])
def test_truncated_algebra_dims(name, k, dim):
    assert g_infinity_truncated(LinearLieAlgebra.from_preset(name), k).dim == dim


def test_trivial_group_gives_abelian_translations():
    ta = truncated_algebra(LinearLieAlgebra.zero(2), 2)
    assert ta.dim == 2 and np.abs(ta.algebra.structure).max() == 0
    fm = flat_model_connection(LinearLieAlgebra.zero(2), 2)
    assert curvature_residual(fm.connection, fm.connection.sample(4)) == 0


@pytest.mark.parametrize("name", ["so2", "so3", "gl2"])
def test_first_truncation_is_the_semidirect_product(name):
    g = LinearLieAlgebra.from_preset(name)
    a1 = g_infinity_truncated(g, 1)
    sd = semidirect(g.rep)
    n, k = g.n, g.dim
    perm = list(range(k, k + n)) + list(range(k))  # a1 orders V first
    c = sd.structure[np.ix_(perm, perm, perm)]
    np.testing.assert_allclose(a1.structure, c, atol=1e-12)


@pytest.mark.parametrize("name,k", [("so2", 1), ("so3", 1), ("co2", 2)])
def test_flat_model_is_flat(name, k):
    fm = flat_model_connection(LinearLieAlgebra.from_preset(name), k)
    conn = fm.connection
    assert curvature_residual(conn, conn.sample(6, 1)) < 1e-9


def test_flat_model_limits():
    with pytest.raises(DimensionOverflow):
        flat_model_connection(LinearLieAlgebra.from_preset("so2"), 4)


def test_jet_exp_matches_rk4_flow_near_zero():
    rng = np.random.default_rng(3)
    n, k = 2, 6
    c = rng.normal(scale=0.5, size=(T.basis(n, k).size, n))
    c[0] = 0.0
    X = JetVectorField(n, k, c)
    assert flow_residual(X, ball_points(n, 0.1, 16, 4)) < 1e-6
