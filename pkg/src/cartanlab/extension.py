"""Extension of the structure group from G to H ⊃ G on local models.

A generalized Cartan connection κ of type h/g on U × G corresponds to a
principal connection on U × H, where h = Lie(H):

    (q♭κ)_(x,h)(ξ, hY) = Y + Ad(h⁻¹) κ_(x,e)(ξ).

Horizontal G-equivariant forms Ψ with values in an H-module W correspond
to horizontal H-equivariant forms, (q♭Ψ)_(x,h) = ρ(h⁻¹) Ψ_(x,e).  Both
correspondences invert by restriction to U × G ⊂ U × H.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cartan import GeneralizedCartanConnection, LocalModel, horizontality_residual, make_principal_cartan
from .errors import DimensionMismatch, NotHorizontal, NotInAlgebra, SubgroupViolation
from .forms import ChartMap, FormField, matrix_times, pullback
from .lie_core import MatrixRep, SubalgebraEmbedding
from .matrix_group import GroupChart, expm, relation_residual

CARTAN, NOT_CARTAN, NOT_APPLICABLE = "CARTAN", "NOT_CARTAN", "NOT_APPLICABLE"


@dataclass(frozen=True, eq=False)
class ExtendedModel:
    """U × G inside U × H, both groups given by matrices of the same size."""

    inner: LocalModel
    outer: LocalModel
    inclusion: np.ndarray  # Lie(G) -> h

    @classmethod
    def build(cls, h_chart: GroupChart, g_chart: GroupChart, base_dim: int, base_box=None,
              tol: float = 1e-10) -> "ExtendedModel":
        """Extended model for G ⊂ H; h = Lie(H) is also the Cartan algebra."""
        if h_chart.blocks is not None or g_chart.blocks is not None:
            raise DimensionMismatch("extension models use exponential coordinates of the first kind")
        h_rep, g_rep = h_chart.rep, g_chart.rep
        if h_rep.rep_dim != g_rep.rep_dim:
            raise DimensionMismatch("G and H must be matrix groups of the same size")
        try:
            inc = h_rep.coords(g_rep.generators, tol=tol).T
        except NotInAlgebra as exc:
            raise SubgroupViolation(f"Lie(G) is not contained in h: {exc}") from None
        h = h_chart.algebra
        emb = SubalgebraEmbedding(h, g_chart.algebra, inc)
        if emb.closure_residual() > tol:
            raise SubgroupViolation("inclusion is not a homomorphism")
        inner = LocalModel.principal(h, g_chart, inc, base_dim, base_box)
        outer = LocalModel.principal(h, h_chart, np.eye(h.dim), base_dim, base_box)
        return cls(inner, outer, inc)

    @property
    def base_dim(self) -> int:
        return self.inner.base_dim

    @property
    def h(self):
        return self.outer.h

    def check_subgroup(self, count: int = 16, seed: int = 0, tol: float = 1e-8) -> float:
        """Relation residual of sampled G elements inside H."""
        tag = self.outer.fiber.rep.relation
        Y = self.inner.sample_structure(count, seed)
        g = expm(self.inner.fiber.rep.matrix(Y))
        res = max((relation_residual(tag, m) for m in g), default=0.0)
        if res > tol:
            raise SubgroupViolation(f"sampled G elements violate the relations of H (residual {res:.3e})")
        return res

    def embedding_map(self) -> ChartMap:
        """(x, s_G) -> (x, s_H), the inclusion U × G -> U × H."""
        m = self.base_dim
        M = np.zeros((self.outer.chart_dim, self.inner.chart_dim))
        M[:m, :m] = np.eye(m)
        M[m:, m:] = self.inclusion
        return ChartMap.linear(M)

    def base_section(self) -> ChartMap:
        """(x, s_H) -> (x, 0_G)."""
        m = self.base_dim
        M = np.zeros((self.inner.chart_dim, self.outer.chart_dim))
        M[:m, :m] = np.eye(m)
        return ChartMap.linear(M)

    def base_slice(self, model: LocalModel) -> ChartMap:
        """x -> (x, e) on the given model."""
        m = self.base_dim
        M = np.zeros((model.chart_dim, m))
        M[:m, :m] = np.eye(m)
        return ChartMap.linear(M)


def q_flat_connection(conn: GeneralizedCartanConnection, ext: ExtendedModel) -> GeneralizedCartanConnection:
    """The principal connection on U × H corresponding to κ on U × G."""
    if conn.model.chart_dim != ext.inner.chart_dim or conn.h.dim != ext.h.dim:
        raise DimensionMismatch("connection does not live on the inner model")
    ext.check_subgroup()
    A = pullback(ext.base_slice(ext.inner), conn.kappa)
    return make_principal_cartan(ext.outer, A)


def q_flat_inverse(omega: GeneralizedCartanConnection, ext: ExtendedModel) -> GeneralizedCartanConnection:
    """Restriction of a principal connection on U × H to U × G."""
    if omega.model.chart_dim != ext.outer.chart_dim:
        raise DimensionMismatch("connection does not live on the outer model")
    kappa = pullback(ext.embedding_map(), omega.kappa)
    return GeneralizedCartanConnection(ext.inner, kappa.with_target(ext.h))


def rep_inverse_function(chart: GroupChart, rep_gens: np.ndarray, m: int) -> FormField:
    """0-form (x, s) -> ρ(a(s)⁻¹), flattened row-major."""
    d = rep_gens.shape[1]
    n = m + chart.dim

    def fn(z):
        M = chart.rep_of(z[..., m:], rep_gens, inverse=True)
        return M.reshape(M.shape[:-2] + (d * d,))[..., None]

    return FormField.exact(fn, 0, n, d * d)


def q_flat_form(psi: FormField, ext: ExtendedModel, rep: MatrixRep, points=None, tol: float = 1e-7,
                inner: GeneralizedCartanConnection | None = None) -> FormField:
    """(q♭Ψ)_(x,h) = ρ(h⁻¹) Ψ_(x,e) for horizontal G-equivariant Ψ; ρ is a representation of h."""
    if rep.algebra.dim != ext.h.dim or psi.dim != rep.rep_dim:
        raise DimensionMismatch("representation must act on the values of Ψ")
    if psi.chart_dim != ext.inner.chart_dim:
        raise DimensionMismatch("Ψ must live on the inner model")
    probe = inner or GeneralizedCartanConnection(ext.inner, _vertical_mc(ext.inner))
    pts = ext.inner.sample(16) if points is None else points
    res = horizontality_residual(probe, psi, pts)
    if res > tol:
        raise NotHorizontal(f"Ψ is not horizontal (residual {res:.3e})")
    restricted = pullback(ext.base_section(), psi)
    Minv = rep_inverse_function(ext.outer.fiber, rep.generators, ext.base_dim)
    return matrix_times(Minv, restricted, rep.rep_dim)


def q_flat_form_inverse(phi: FormField, ext: ExtendedModel) -> FormField:
    return pullback(ext.embedding_map(), phi)


def _vertical_mc(model: LocalModel) -> FormField:
    return make_principal_cartan(model).kappa


def equivariant_form(model: LocalModel, beta: FormField, rep_gens: np.ndarray) -> FormField:
    """Ψ_(x,a) = ρ(a⁻¹) β(x): horizontal and equivariant for the structure group.

    ``rep_gens`` are the generators (dim g, W, W) of the fiber algebra on W.
    """
    m = model.base_dim
    if beta.chart_dim != m:
        raise DimensionMismatch("β must live on the base")
    P = np.zeros((m, model.chart_dim))
    P[:, :m] = np.eye(m)
    lifted = pullback(ChartMap.linear(P), beta)
    Minv = rep_inverse_function(model.fiber, rep_gens, m)
    return matrix_times(Minv, lifted, rep_gens.shape[1])


def quotient_residual(conn: GeneralizedCartanConnection, ext: ExtendedModel, points, g_elements, h_elements) -> float:
    """Well-definedness of q♭κ on U × G × H modulo G.

    Compares Y + Ad(h⁻¹)κ_u(X) with the same formula at (u·g, g⁻¹h) on the
    corresponding tangent vectors, for every coordinate X and Y = 0.
    """
    model = conn.model
    ad_h = ext.h.ad_basis
    base = conn.matrix(points)
    worst = 0.0
    scale = max(1.0, float(np.abs(base).max(initial=0.0)))
    for Yg in np.atleast_2d(g_elements):
        moved, D = model.right_action(points, Yg)
        Yh_g = ext.inclusion @ Yg
        for Z in np.atleast_2d(h_elements):
            Ad_hinv = expm(-np.einsum("i,iab->ab", Z, ad_h))
            # Ad((g^-1 h)^-1) = Ad(h^-1) Ad(g)
            Ad_g = expm(np.einsum("i,iab->ab", Yh_g, ad_h))
            lhs = np.einsum("ab,...bn->...an", Ad_hinv @ Ad_g, conn.matrix(moved) @ D)
            rhs = np.einsum("ab,...bn->...an", Ad_hinv, base)
            worst = max(worst, float(np.abs(lhs - rhs).max(initial=0.0)))
    return worst / scale


@dataclass(frozen=True)
class RestrictionReport:
    intersection_dims: tuple[int, ...]
    verdict: str
    horizontal_contained: bool
    dims_match: bool


def restrict_connection(omega: GeneralizedCartanConnection, ext: ExtendedModel, points=None,
                        tol: float = 1e-9) -> RestrictionReport:
    """Ranks of T(U × G) ∩ ker ω along U × G ⊂ U × H."""
    if points is None:
        points = ext.inner.sample(16)
    emb = ext.embedding_map()
    up = np.asarray(emb(points))
    J = np.broadcast_to(emb.jac(points), up.shape[:-1] + (ext.outer.chart_dim, ext.inner.chart_dim))
    W = omega.matrix(up)
    dims, contained = [], True
    for Jb, Wb in zip(J.reshape(-1, *J.shape[-2:]), W.reshape(-1, *W.shape[-2:])):
        _, s, vt = np.linalg.svd(Wb)
        rank_w = int((s > tol * max(1.0, s[0] if s.size else 0.0)).sum())
        K = vt[rank_w:].T  # kernel basis
        rj = np.linalg.matrix_rank(Jb, tol=tol)
        rk = K.shape[1]
        rsum = np.linalg.matrix_rank(np.hstack([Jb, K]), tol=tol) if rk else rj
        dims.append(rj + rk - rsum)
        contained = contained and rsum == rj
    dims_match = ext.base_dim + ext.inner.fiber.dim == ext.h.dim
    if not dims_match:
        verdict = NOT_APPLICABLE
    else:
        verdict = CARTAN if all(d == 0 for d in dims) else NOT_CARTAN
    return RestrictionReport(tuple(dims), verdict, contained, dims_match)
