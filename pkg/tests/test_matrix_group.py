import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from cartanlab import taylor as T
from cartanlab.errors import OutOfBranch
from cartanlab.lie_core import preset
from cartanlab.matrix_group import (Ad, Ad_matrix, GroupChart, GroupValuedMap, exp, expm, left_log_derivative, log,
                                    phi_left, project_to_group, relation_residual, right_log_derivative)
from cartanlab.poly import Poly
from cartanlab.taylor import Taylor

small = st.lists(st.floats(-0.5, 0.5), min_size=3, max_size=3).map(np.array)


def test_expm_matches_scipy_on_random_matrices():
    rng = np.random.default_rng(1)
    for scale in (0.01, 0.3, 2.0, 9.0):
        A = rng.normal(scale=scale, size=(5, 4, 4))
        ref = np.stack([scipy.linalg.expm(a) for a in A])
        np.testing.assert_allclose(expm(A), ref, rtol=1e-12, atol=1e-12 * np.abs(ref).max())


def test_expm_on_taylor_input_has_the_right_derivative():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(3, 3))
    t = Taylor.variables(np.array([0.4]), 1)
    E = expm(T.einsum("i,ab->iab", t, X)[0])
    np.testing.assert_allclose(T.value(E), scipy.linalg.expm(0.4 * X), atol=1e-13)
    np.testing.assert_allclose(T.value(E.grad())[..., 0], X @ scipy.linalg.expm(0.4 * X), atol=1e-12)


def test_phi_left_against_quadrature():
    """phi_left(M) = ∫_0^1 exp(-sM) ds, checked with Gauss-Legendre quadrature."""
    rng = np.random.default_rng(3)
    M = rng.normal(size=(3, 3))
    nodes, weights = np.polynomial.legendre.leggauss(30)
    s = 0.5 * (nodes + 1)
    ref = sum(0.5 * w * scipy.linalg.expm(-si * M) for si, w in zip(s, weights))
    np.testing.assert_allclose(phi_left(M), ref, atol=1e-12)


def test_exp_of_zero_is_identity():
    so3, rep = preset("so3")
    np.testing.assert_array_equal(exp(rep, np.zeros(3)).matrix, np.eye(3))


def test_so2_exp_is_rotation():
    _, rep = preset("so2")
    g = exp(rep, [0.3]).matrix
    c, s = np.cos(0.3), np.sin(0.3)
    np.testing.assert_allclose(g, [[c, -s], [s, c]], atol=1e-15)
    np.testing.assert_allclose(log(rep, g), [0.3], atol=1e-12)


@given(small)
def test_exp_times_exp_of_minus_is_identity(X):
    _, rep = preset("sl2")
    g = exp(rep, X) @ exp(rep, -X)
    assert np.abs(g.matrix - np.eye(2)).max() <= 1e-10


@given(small)
def test_log_inverts_exp(X):
    _, rep = preset("so3")
    np.testing.assert_allclose(log(rep, exp(rep, X * 0.5)), X * 0.5, atol=1e-9)


def test_log_of_identity_and_out_of_branch():
    _, rep = preset("so2")
    np.testing.assert_allclose(log(rep, np.eye(2)), [0.0], atol=1e-15)
    with pytest.raises(OutOfBranch):
        log(rep, exp(rep, [3.0]))


def test_relation_residuals_of_exponentials():
    rng = np.random.default_rng(4)
    for name in ("so3", "sl2", "sp2", "co3", "e2", "heis3"):
        alg, rep = preset(name)
        g = exp(rep, rng.normal(size=alg.dim) * 0.4).matrix
        assert relation_residual(rep.relation, g) <= 1e-12, name
        noisy = g + 1e-6 * rng.normal(size=g.shape)
        if rep.relation != "unipotent":
            assert relation_residual(rep.relation, project_to_group(rep.relation, noisy)) <= 1e-12, name


def test_Ad_against_exp_ad_series():
    so3, rep = preset("so3")
    rng = np.random.default_rng(5)
    Z = rng.normal(size=3)
    adZ = so3.ad(Z)
    series = sum(np.linalg.matrix_power(adZ, k) / float(np.prod(range(1, k + 1))) for k in range(30))
    np.testing.assert_allclose(Ad_matrix(rep, exp(rep, Z)), series, atol=1e-8)
    np.testing.assert_allclose(Ad(rep, np.eye(3), Z), Z, atol=1e-14)


@settings(max_examples=25)
@given(small, small, small)
def test_Ad_is_an_automorphism(Z, X, Y):
    sl2, rep = preset("sl2")
    g = exp(rep, Z)
    lhs = Ad(rep, g, sl2.bracket(X, Y))
    rhs = sl2.bracket(Ad(rep, g, X), Ad(rep, g, Y))
    assert np.abs(lhs - rhs).max() <= 1e-9


def _one_parameter(rep, X):
    P = [Poly(1, {(1,): float(x)}) for x in X]
    return GroupValuedMap.exp_product(rep, [P], (-np.ones(1), np.ones(1)))


def test_log_derivatives_of_one_parameter_subgroup():
    _, rep = preset("so3")
    X = np.array([0.3, -0.7, 1.1])
    phi = _one_parameter(rep, X)
    x = np.array([[0.2]])
    np.testing.assert_allclose(left_log_derivative(phi, x, [1.0])[0], X, atol=1e-8)
    np.testing.assert_allclose(right_log_derivative(phi, x, [1.0])[0], X, atol=1e-8)
    const = GroupValuedMap.sampled(rep, 1, lambda x: np.broadcast_to(np.eye(3), x.shape[:-1] + (3, 3)),
                                   (-np.ones(1), np.ones(1)))
    assert np.abs(left_log_derivative(const, x, [1.0])).max() == 0.0
    assert np.abs(right_log_derivative(const, x, [1.0])).max() == 0.0


def test_log_derivative_translation_invariance():
    so3, rep = preset("so3")
    rng = np.random.default_rng(6)
    factors = [[Poly.random(2, 2, rng, 0.5) for _ in range(3)] for _ in range(2)]
    phi = GroupValuedMap.exp_product(rep, factors, (-np.ones(2), np.ones(2)))
    g0 = exp(rep, [0.4, 0.1, -0.3]).matrix
    x, v = rng.uniform(-0.5, 0.5, size=(4, 2)), rng.normal(size=2)
    base_l, base_r = left_log_derivative(phi, x, v), right_log_derivative(phi, x, v)
    assert np.abs(left_log_derivative(phi.left_multiplied(g0), x, v) - base_l).max() <= 1e-9
    assert np.abs(right_log_derivative(phi.right_multiplied(g0), x, v) - base_r).max() <= 1e-9


def test_second_kind_chart_round_trip_and_left_mc():
    alg, rep = preset("sl2")
    chart = GroupChart(alg, rep, blocks=((0,), (1, 2)))
    s = np.array([0.2, -0.3, 0.1])
    g = chart.matrix(s)
    expected = scipy.linalg.expm(rep.matrix([0, -0.3, 0.1])) @ scipy.linalg.expm(rep.matrix([0.2, 0, 0]))
    np.testing.assert_allclose(g, expected, atol=1e-14)
    np.testing.assert_allclose(chart.coordinates_of(g[None])[0], s, atol=1e-11)
    h = 1e-6
    for i in range(3):
        e = np.eye(3)[i] * h
        fd = np.linalg.solve(g, (chart.matrix(s + e) - chart.matrix(s - e)) / (2 * h))
        np.testing.assert_allclose(rep.coords(fd), chart.left_mc(s)[:, i], atol=1e-8)
