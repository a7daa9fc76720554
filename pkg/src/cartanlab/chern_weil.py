"""Chern-Weil forms of generalized Cartan connections and their transgressions."""

from __future__ import annotations

import numpy as np

from .cartan import GeneralizedCartanConnection, curvature
from .errors import DimensionMismatch, ModelMismatch, NotInvariant
from .forms import FormField, apply_multilinear, exterior_derivative, wedge_bracket
from .lie_core import (LieAlgebra, MatrixRep, MultilinearFunction, invariance_residual, killing_multilinear,
                       trace_form)

QUADRATURE_NODES = 8


def check_invariant(alg: LieAlgebra, f: MultilinearFunction, tol: float = 1e-8) -> float:
    if f.dim != alg.dim:
        raise DimensionMismatch("multilinear function and algebra have different dimensions")
    scale = max(1.0, float(np.abs(f.coeffs).max(initial=0.0)))
    res = invariance_residual(alg, f) / scale
    if res > tol:
        raise NotInvariant(f"f is not ad-invariant (residual {res:.3e})")
    return res


def chern_weil_form(f: MultilinearFunction, conn: GeneralizedCartanConnection) -> FormField:
    """f^K = f(K, ..., K), a closed scalar 2k-form."""
    check_invariant(conn.h, f)
    K = curvature(conn)
    return apply_multilinear(f, *([K] * f.arity))


def _same_model(c0: GeneralizedCartanConnection, c1: GeneralizedCartanConnection) -> None:
    m0, m1 = c0.model, c1.model
    if m0 is m1:
        return
    same = (m0.chart_dim == m1.chart_dim and m0.h.same_as(m1.h) and m0.g.dim == m1.g.dim
            and np.allclose(m0.structure.inclusion, m1.structure.inclusion))
    if not same:
        raise ModelMismatch("connections live on different models")


def transgression(f: MultilinearFunction, conn0: GeneralizedCartanConnection, conn1: GeneralizedCartanConnection,
                  nodes: int = QUADRATURE_NODES) -> FormField:
    """TP = k ∫₀¹ f(κ₁ − κ₀, K_t, ..., K_t) dt along κ_t = κ₀ + t(κ₁ − κ₀).

    Gauss-Legendre in t; the integrand is polynomial in t of degree 2k − 1,
    so ``nodes`` ≥ k makes the quadrature exact.
    """
    _same_model(conn0, conn1)
    check_invariant(conn0.h, f)
    k = f.arity
    D = conn1.kappa - conn0.kappa
    x, w = np.polynomial.legendre.leggauss(nodes)
    ts, ws = 0.5 * (x + 1.0), 0.5 * w
    total: FormField | None = None
    for t, wt in zip(ts, ws):
        kt = conn0.kappa + D * float(t)
        Kt = exterior_derivative(kt) + wedge_bracket(kt, kt) * 0.5
        term = apply_multilinear(f, D, *([Kt] * (k - 1))) * float(k * wt)
        total = term if total is None else total + term
    return total


def closedness_residual(form: FormField, points) -> float:
    """max |d form| relative to max(1, |form|)."""
    d = exterior_derivative(form).components(points)
    scale = max(1.0, float(np.abs(form.components(points)).max(initial=0.0)))
    return float(np.abs(d).max(initial=0.0)) / scale


def transgression_residual(f: MultilinearFunction, conn0, conn1, points, nodes: int = QUADRATURE_NODES) -> float:
    """max |f^{K₁} − f^{K₀} − d TP| relative to the size of the terms."""
    a = chern_weil_form(f, conn1).components(points)
    b = chern_weil_form(f, conn0).components(points)
    dtp = exterior_derivative(transgression(f, conn0, conn1, nodes)).components(points)
    scale = max(1.0, *(float(np.abs(v).max(initial=0.0)) for v in (a, b, dtp)))
    return float(np.abs(a - b - dtp).max(initial=0.0)) / scale


def invariant_polynomial(alg: LieAlgebra, kind: str, power: int = 2, rep: MatrixRep | None = None,
                         coeffs=None) -> MultilinearFunction:
    """Invariant symmetric function from a literal: trace powers, Killing form or explicit tensor."""
    if kind == "trace_power":
        if rep is None:
            raise DimensionMismatch("trace_power needs a representation")
        return trace_form(rep, power)
    if kind == "killing":
        return killing_multilinear(alg)
    if kind == "tensor":
        return MultilinearFunction(alg.dim, np.asarray(coeffs, dtype=float), symmetric=True)
    raise ValueError(f"unknown invariant polynomial kind {kind!r}")
