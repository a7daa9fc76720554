import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from cartanlab.developing import (LEFT, RIGHT, Path, chain_map_residual, delta_l, delta_l_match_residual, delta_r,
                                  develop, flat_pullback, holonomy, holonomy_defect, mc_residual, random_loop,
                                  random_path)
from cartanlab.errors import DimensionMismatch, StepUnstable
from cartanlab.forms import FormField, sample_points
from cartanlab.lie_core import dual_basis_form, preset
from cartanlab.matrix_group import GroupValuedMap
from cartanlab.poly import Poly

seeds = st.integers(0, 2**16)
BOX = (np.array([-1.0, -1.0]), np.array([1.0, 1.0]))


def exp_map(name, seed, factors=2, scale=0.5):
    alg, rep = preset(name)
    rng = np.random.default_rng(seed)
    polys = [[Poly.random(2, 2, rng, scale) for _ in range(alg.dim)] for _ in range(factors)]
    return GroupValuedMap.exp_product(rep, polys, BOX)


def test_zero_form_develops_to_a_constant():
    so3, rep = preset("so3")
    g0 = scipy.linalg.expm(rep.matrix([0.1, 0.2, 0.3]))
    dev = develop(FormField.zero(1, 2, so3), rep, random_path(*BOX, np.random.default_rng(0)), g0, 64)
    np.testing.assert_allclose(dev.values, np.broadcast_to(g0, dev.values.shape), atol=1e-15)


def test_constant_form_along_straight_path_gives_exponential():
    so3, rep = preset("so3")
    X = np.array([0.4, -0.3, 0.9])
    kappa = FormField.constant(X[:, None], 1, 1, so3)
    dev = develop(kappa, rep, Path.straight([0.0], [1.0]), None, 256)
    np.testing.assert_allclose(dev.endpoint, scipy.linalg.expm(rep.matrix(X)), atol=1e-12)


def test_abelian_holonomy_is_exponential_of_enclosed_area():
    """κ = x dy in so(2): the holonomy of a counterclockwise square of side s is exp(s² J)."""
    so2, rep = preset("so2")
    kappa = FormField.from_poly({(0, (1,)): Poly.var(2, 0)}, 1, 2, so2)
    s = 0.8
    square = Path.polyline_smooth([[0, 0], [s, 0], [s, s], [0, s], [0, 0]])
    np.testing.assert_allclose(holonomy(kappa, rep, square, 512), scipy.linalg.expm(s * s * rep.generators[0]),
                               atol=1e-10)


@pytest.mark.parametrize("name", ["so3", "sl2", "heis3"])
def test_log_derivatives_satisfy_maurer_cartan(name):
    psi = exp_map(name, 1)
    pts = sample_points(*BOX, 12, 2)
    assert mc_residual(delta_l(psi), RIGHT, pts) < 1e-10
    assert mc_residual(delta_r(psi), LEFT, pts) < 1e-10


def test_wrong_convention_is_detected():
    psi = exp_map("so3", 2)
    pts = sample_points(*BOX, 12, 3)
    assert mc_residual(delta_l(psi), LEFT, pts) > 1e-3


@settings(max_examples=5, deadline=None)
@given(seeds)
def test_development_recovers_the_map(seed):
    psi = exp_map("sl2", seed)
    rep = psi.rep
    rng = np.random.default_rng(seed)
    path = random_path(*BOX, rng)
    g0 = scipy.linalg.expm(rep.matrix(rng.normal(size=3) * 0.3))
    dev = develop(delta_l(psi), rep, path, g0, 512)
    c0, c1 = path(0.0)[None], path(1.0)[None]
    expected = g0 @ np.linalg.inv(psi(c0)[0]) @ psi(c1)[0]
    np.testing.assert_allclose(dev.endpoint, expected, atol=1e-8)
    assert delta_l_match_residual(dev, delta_l(psi), rep, path) < 1e-6


def test_left_translation_of_initial_value():
    psi = exp_map("so3", 4)
    rep = psi.rep
    path = random_path(*BOX, np.random.default_rng(4))
    g = scipy.linalg.expm(rep.matrix([0.3, -0.2, 0.5]))
    a = develop(delta_l(psi), rep, path, g, 256).values
    b = develop(delta_l(psi), rep, path, None, 256).values
    np.testing.assert_allclose(a, g @ b, atol=1e-12)


def test_two_paths_with_common_endpoints_agree():
    psi = exp_map("heis3", 5)
    rep = psi.rep
    p1 = Path.polyline_smooth([[-0.5, -0.5], [0.7, -0.2], [0.4, 0.6]])
    p2 = Path.polyline_smooth([[-0.5, -0.5], [-0.8, 0.9], [0.1, 0.1], [0.4, 0.6]])
    e1 = develop(delta_l(psi), rep, p1, None, 2048).endpoint
    e2 = develop(delta_l(psi), rep, p2, None, 2048).endpoint
    np.testing.assert_allclose(e1, e2, atol=1e-9)
    loop = random_loop(*BOX, np.random.default_rng(6))
    assert holonomy_defect(delta_l(psi), rep, loop, 512) < 1e-9


def test_rk4_converges_at_fourth_order():
    psi = exp_map("so3", 7)
    rep = psi.rep
    path = Path.poly([[0.1, -0.3], [0.5, 0.4], [-0.3, 0.2]])
    kl = delta_l(psi)
    ref = develop(kl, rep, path, None, 1024).endpoint
    errs = [np.abs(develop(kl, rep, path, None, n, step_tol=np.inf).endpoint - ref).max() for n in (16, 32, 64)]
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 3.5), rates


def test_coarse_grid_on_a_fast_form_is_rejected():
    so3, rep = preset("so3")
    kappa = FormField.constant(np.array([[40.0], [0.0], [30.0]]), 1, 1, so3)
    with pytest.raises(StepUnstable):
        develop(kappa, rep, Path.straight([0.0], [1.0]), None, 8)


def test_develop_argument_errors():
    so3, rep = preset("so3")
    kappa = FormField.zero(1, 2, so3)
    with pytest.raises(DimensionMismatch):
        develop(kappa, rep, Path.straight([0.0], [1.0]))
    with pytest.raises(ValueError):
        develop(kappa, rep, Path.straight([0.0, 0.0], [1.0, 0.0]), None, 7)
    with pytest.raises(DimensionMismatch):
        holonomy(kappa, rep, Path.straight([0.0, 0.0], [1.0, 0.0]))


def test_flat_pullback_of_a_dual_vector_is_a_component():
    psi = exp_map("so3", 8)
    kl = delta_l(psi)
    pts = sample_points(*BOX, 5, 1)
    np.testing.assert_allclose(flat_pullback(kl, dual_basis_form(3, [1])).components(pts)[:, 0],
                               kl.components(pts)[:, 1], atol=1e-14)


@pytest.mark.parametrize("indices", [[0], [2], [0, 1]])
def test_flat_pullback_is_a_chain_map(indices):
    psi = exp_map("sl2", 9)
    kl = delta_l(psi)
    pts = sample_points(*BOX, 8, 2)
    assert chain_map_residual(kl, psi.rep.algebra, dual_basis_form(3, indices), pts) < 1e-9


def test_paths_and_literals():
    rng = np.random.default_rng(3)
    p = random_path(*BOX, rng)
    assert p.velocity_residual() < 1e-8
    q = Path.from_literal(p.to_literal())
    t = np.linspace(0, 1, 7)
    np.testing.assert_allclose(q(t), p(t))
    assert random_loop(*BOX, rng).closed and not p.closed
    poly = Path.poly([[0, 1], [2, 0], [0, 3]])
    assert poly.velocity_residual() < 1e-8
