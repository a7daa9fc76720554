import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cartanlab.errors import InvalidAlgebra
from cartanlab.lie_core import (ALGEBRA_PRESETS, LieAlgebra, MultilinearFunction, abelian_structure, adjoint_rep,
                                ce_differential, dual_basis_form, invariance_residual, killing_form,
                                killing_multilinear, preset, semidirect, so, trace_form, gl)

vectors3 = st.lists(st.floats(-5, 5), min_size=3, max_size=3).map(np.array)


def matrix_commutator_ad(name):
    """ad matrices computed from matrix commutators in the defining representation."""
    alg, rep = preset(name)
    G = rep.generators
    flat = G.reshape(alg.dim, -1).T
    out = np.zeros((alg.dim, alg.dim, alg.dim))
    for i in range(alg.dim):
        for j in range(alg.dim):
            C = G[i] @ G[j] - G[j] @ G[i]
            out[i, :, j] = np.linalg.lstsq(flat, C.ravel(), rcond=None)[0]
    return out


def test_so3_bracket_of_first_two_basis_vectors_is_third():
    so3, _ = preset("so3")
    np.testing.assert_allclose(so3.bracket([1, 0, 0], [0, 1, 0]), [0, 0, 1])


@given(vectors3)
def test_bracket_of_vector_with_itself_vanishes(X):
    so3, _ = preset("so3")
    assert np.abs(so3.bracket(X, X)).max() == 0.0


def test_abelian_bracket_is_zero():
    alg = LieAlgebra(3, abelian_structure(3))
    assert not np.any(alg.bracket([1, 2, 3], [4, 5, 6]))


def test_ad_matches_matrix_commutators_for_every_preset():
    for name in ALGEBRA_PRESETS:
        alg, _ = preset(name)
        np.testing.assert_allclose(alg.ad_basis, matrix_commutator_ad(name), atol=1e-12, err_msg=name)


def test_ad_of_e3_in_so3_rotates_e1_e2_plane():
    so3, _ = preset("so3")
    ad3 = so3.ad([0, 0, 1])
    np.testing.assert_allclose(ad3, [[0, -1, 0], [1, 0, 0], [0, 0, 0]])
    assert not np.any(so3.ad(np.zeros(3)))


@given(vectors3)
def test_ad_x_kills_x(X):
    so3, _ = preset("so3")
    assert np.abs(so3.ad(X) @ X).max() <= 1e-12 * max(1.0, np.abs(X).max() ** 2)


def test_killing_forms_against_brute_force_traces():
    so3, _ = preset("so3")
    np.testing.assert_allclose(killing_form(so3), -2 * np.eye(3), atol=1e-12)
    sl2, _ = preset("sl2")
    ad = matrix_commutator_ad("sl2")
    brute = np.array([[np.trace(ad[i] @ ad[j]) for j in range(3)] for i in range(3)])
    np.testing.assert_allclose(killing_form(sl2), brute, atol=1e-12)
    eig = np.linalg.eigvalsh(killing_form(sl2))
    assert (eig > 0).sum() == 2 and (eig < 0).sum() == 1
    assert not np.any(killing_form(LieAlgebra(2, abelian_structure(2))))


def test_ce_differential_of_dual_basis_element_on_so3():
    so3, _ = preset("so3")
    d1 = ce_differential(so3, dual_basis_form(3, [0]))
    expected = -dual_basis_form(3, [1, 2]).coeffs
    np.testing.assert_allclose(d1.coeffs, expected, atol=1e-15)


def test_ce_differential_on_abelian_algebra_vanishes():
    alg = LieAlgebra(3, abelian_structure(3))
    for k in (1, 2):
        for I in itertools.combinations(range(3), k):
            assert not np.any(ce_differential(alg, dual_basis_form(3, I)).coeffs)


@pytest.mark.parametrize("name", ["so3", "sl2", "heis3", "e2", "gl2", "aff1"])
@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**16))
def test_ce_differential_squares_to_zero(name, seed):
    alg, _ = preset(name)
    rng = np.random.default_rng(seed)
    for k in range(1, min(alg.dim, 3)):
        f = MultilinearFunction.antisymmetrize(rng.normal(size=(alg.dim,) * k))
        dd = ce_differential(alg, ce_differential(alg, f))
        assert np.abs(dd.coeffs).max(initial=0.0) <= 1e-12


def test_invariance_residuals():
    for name in ("so3", "sl2", "gl2"):
        alg, rep = preset(name)
        assert invariance_residual(alg, killing_multilinear(alg)) <= 1e-10
        assert invariance_residual(alg, trace_form(rep, 2)) <= 1e-10
    so3, _ = preset("so3")
    rng = np.random.default_rng(7)
    f = MultilinearFunction(3, rng.normal(size=(3, 3)))
    assert invariance_residual(so3, f) > 1e-3


def test_trace_form_matches_brute_force_trace():
    sl2, rep = preset("sl2")
    f = trace_form(rep, 2)
    for i, j in itertools.product(range(3), repeat=2):
        X, Y = np.eye(3)[i], np.eye(3)[j]
        assert f(X, Y) == pytest.approx(np.trace(rep.matrix(X) @ rep.matrix(Y)))


def test_semidirect_products():
    so2, rep = so(2)
    e2 = semidirect(rep)
    assert e2.dim == 3
    assert not np.any(e2.structure[:, 1:, 1:])  # [V, V] = 0
    gl1, rep1 = gl(1)
    aff = semidirect(rep1)
    np.testing.assert_allclose(aff.bracket([1, 0], [0, 1]), [0, 1])  # [X, v] = v
    so3, rep3 = so(3)
    assert semidirect(rep3).jacobi_residual() <= 1e-12


def test_adjoint_representation_is_a_homomorphism():
    for name in ALGEBRA_PRESETS:
        alg, _ = preset(name)
        assert adjoint_rep(alg).homomorphism_residual() <= 1e-12


def test_definition_round_trip():
    for name in ALGEBRA_PRESETS:
        alg, _ = preset(name)
        again = LieAlgebra.from_definition(alg.to_definition())
        assert again.same_as(alg)


def test_invalid_definitions_are_rejected():
    with pytest.raises(InvalidAlgebra):
        LieAlgebra.from_definition({"dim": 2, "basis": ["a", "b"], "brackets": [{"i": 0, "j": 0, "coeffs": {}}]})
    # [a,b] = a, [b,c] = b: the Jacobi sum on (a, b, c) is -a
    bad = {"dim": 3, "basis": ["a", "b", "c"],
           "brackets": [{"i": 0, "j": 1, "coeffs": {"a": 1}}, {"i": 1, "j": 2, "coeffs": {"b": 1}}]}
    with pytest.raises(InvalidAlgebra):
        LieAlgebra.from_definition(bad)
