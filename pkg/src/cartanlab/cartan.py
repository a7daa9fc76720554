"""Cartan and generalized Cartan connections on local models.

A local model is a chart box.  It carries a base factor U ⊂ R^m and,
optionally, a fiber factor: coordinates on a matrix group K near e whose
algebra k maps into h.  The structure algebra g ⊂ k acts on the fiber by
right multiplication.  Two cases are covered:

* principal models U × G, where g = k;
* group models, where m = 0 and k = h, with g ⊂ h acting on H from the right.

A bare model has no fiber.  Its fundamental fields come from the
connection itself, as ζ_Y = κ⁻¹(Y).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import taylor as T
from .checks import Check
from .errors import (BackendUnsupported, DimensionMismatch, NotHorizontal, NotReductive, SingularCoframe)
from .forms import (FD_STEP, FormField, contract_components, evaluate_at, exterior_derivative, full_tensor,
                    mc_expression, minors, rho_wedge, sample_points, wedge_bracket)
from .lie_core import LieAlgebra, MatrixRep, SubalgebraEmbedding
from .matrix_group import GroupChart, expm
from .poly import PolyMatrix
from .taylor import Taylor

PRINCIPAL, BARE = "principal", "bare"

COND_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class LocalModel:
    """Chart U × K with a structure algebra g acting on K by right multiplication."""

    h: LieAlgebra
    structure: SubalgebraEmbedding
    base_dim: int
    fiber: GroupChart | None = None
    fiber_to_h: np.ndarray | None = None
    structure_to_fiber: np.ndarray | None = None
    base_box: tuple[np.ndarray, np.ndarray] | None = None
    bare_dim: int | None = None

    def __post_init__(self):
        if self.base_box is None:
            box = (-np.ones(self.base_dim), np.ones(self.base_dim))
        else:
            box = tuple(np.asarray(b, dtype=float).reshape(self.base_dim) for b in self.base_box)
        object.__setattr__(self, "base_box", box)
        if self.fiber is not None:
            k = self.fiber.dim
            f2h = np.eye(self.h.dim, k) if self.fiber_to_h is None else np.asarray(self.fiber_to_h, dtype=float)
            if f2h.shape != (self.h.dim, k):
                raise DimensionMismatch("fiber_to_h must map the fiber algebra into h")
            object.__setattr__(self, "fiber_to_h", f2h)
            s2f = np.eye(k) if self.structure_to_fiber is None else np.asarray(self.structure_to_fiber, dtype=float)
            if s2f.shape != (k, self.g.dim):
                raise DimensionMismatch("structure_to_fiber must map g into the fiber algebra")
            object.__setattr__(self, "structure_to_fiber", s2f)
            if np.abs(f2h @ s2f - self.structure.inclusion).max(initial=0.0) > 1e-12:
                raise DimensionMismatch("structure algebra embeddings are inconsistent")
        elif self.bare_dim is None:
            object.__setattr__(self, "bare_dim", self.h.dim)

    # -- constructors --
    @classmethod
    def principal(cls, h: LieAlgebra, fiber: GroupChart, fiber_to_h, base_dim: int, base_box=None) -> "LocalModel":
        """U × G with g = Lie(G) included in h by ``fiber_to_h``."""
        f2h = np.asarray(fiber_to_h, dtype=float).reshape(h.dim, fiber.dim)
        emb = SubalgebraEmbedding(h, fiber.algebra, f2h)
        return cls(h, emb, base_dim, fiber, f2h, np.eye(fiber.dim), base_box)

    @classmethod
    def group(cls, chart: GroupChart, structure: SubalgebraEmbedding | None = None) -> "LocalModel":
        """The group H itself, with g ⊂ h acting by right multiplication."""
        h = chart.algebra
        emb = structure or SubalgebraEmbedding(h, LieAlgebra(0, np.zeros((0, 0, 0))), np.zeros((h.dim, 0)))
        return cls(h, emb, 0, chart, np.eye(h.dim), emb.inclusion)

    @classmethod
    def bare(cls, h: LieAlgebra, structure: SubalgebraEmbedding, box) -> "LocalModel":
        lo, hi = (np.asarray(b, dtype=float) for b in box)
        return cls(h, structure, lo.size, None, base_box=(lo, hi), bare_dim=lo.size)

    # -- geometry --
    @property
    def kind(self) -> str:
        s2f = self.structure_to_fiber
        if self.fiber is not None and s2f.shape[0] == s2f.shape[1] and np.allclose(s2f, np.eye(s2f.shape[0])):
            return PRINCIPAL
        return BARE

    @property
    def g(self) -> LieAlgebra:
        return self.structure.sub

    @property
    def fiber_dim(self) -> int:
        return 0 if self.fiber is None else self.fiber.dim

    @property
    def chart_dim(self) -> int:
        return self.bare_dim if self.fiber is None else self.base_dim + self.fiber.dim

    @property
    def box(self) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.base_box
        if self.fiber is None:
            return lo, hi
        r = self.fiber.radius
        k = self.fiber.dim
        return np.concatenate([lo, -r * np.ones(k)]), np.concatenate([hi, r * np.ones(k)])

    def sample(self, count: int = 64, seed: int = 0x5EED) -> np.ndarray:
        lo, hi = self.box
        return sample_points(lo, hi, count, seed)

    def sample_structure(self, count: int, seed: int, scale: float = 0.3) -> np.ndarray:
        """Structure-group elements exp(Y) near e, returned as algebra coordinates Y."""
        rng = np.random.default_rng(seed)
        return rng.uniform(-scale, scale, size=(count, self.g.dim))

    def split(self, points):
        return points[..., : self.base_dim], points[..., self.base_dim:]

    def fundamental_field(self, Y, points) -> np.ndarray:
        """Generator of the right action of exp(tY), Y ∈ g, in chart coordinates."""
        if self.fiber is None:
            raise BackendUnsupported("bare models take fundamental fields from the connection")
        points = np.asarray(points, dtype=float)
        _, s = self.split(points)
        Yk = np.asarray(Y, dtype=float) @ self.structure_to_fiber.T
        Yk = np.broadcast_to(Yk, s.shape)
        M = self.fiber.left_mc(s)
        vs = np.linalg.solve(M, Yk[..., None])[..., 0]
        return np.concatenate([np.zeros(points.shape[:-1] + (self.base_dim,)), vs], axis=-1)

    def right_action(self, points, Y) -> tuple[np.ndarray, np.ndarray]:
        """(points · exp(Y), pushforward matrices of the action at points)."""
        if self.fiber is None:
            raise BackendUnsupported("bare models carry no group action")
        points = np.asarray(points, dtype=float)
        x, s = self.split(points)
        Y = np.broadcast_to(np.asarray(Y, dtype=float), points.shape[:-1] + (self.g.dim,))
        Yk = Y @ self.structure_to_fiber.T
        g = expm(self.fiber.rep.matrix(Yk))
        a = self.fiber.matrix(s)
        s_new = self.fiber.coordinates_of(a @ g, guess=s)
        Ad_inv = expm(-self.fiber.algebra.ad(Yk))
        Ms, Mn = self.fiber.left_mc(s), self.fiber.left_mc(s_new)
        Dfib = np.linalg.solve(Mn, Ad_inv @ Ms)
        m = self.base_dim
        n = self.chart_dim
        D = np.zeros(points.shape[:-1] + (n, n))
        D[..., :m, :m] = np.eye(m)
        D[..., m:, m:] = Dfib
        return np.concatenate([x, s_new], axis=-1), D

    def structure_Ad_inverse(self, Y, rep_gens: np.ndarray) -> np.ndarray:
        """rho(exp(Y)^-1) for g acting through generators rep_gens (dim g, W, W)."""
        return expm(-np.einsum("...i,iab->...ab", np.asarray(Y, dtype=float), rep_gens))

    def g_adjoint_generators(self) -> np.ndarray:
        """ad_h restricted to g, as generators on h."""
        return np.einsum("ai,aks->iks", self.structure.inclusion, self.h.ad_basis)


@dataclass(frozen=True, eq=False)
class GeneralizedCartanConnection:
    """An h-valued 1-form on a local model that reproduces fundamental fields and is equivariant."""

    model: LocalModel
    kappa: FormField

    def __post_init__(self):
        k = self.kappa
        if k.degree != 1:
            raise DimensionMismatch("a Cartan connection is a 1-form")
        if k.chart_dim != self.model.chart_dim:
            raise DimensionMismatch(f"form lives on dimension {k.chart_dim}, model has {self.model.chart_dim}")
        if k.dim != self.model.h.dim:
            raise DimensionMismatch("form values must lie in h")
        if not isinstance(k.target, LieAlgebra):
            object.__setattr__(self, "kappa", k.with_target(self.model.h))

    @property
    def h(self) -> LieAlgebra:
        return self.model.h

    @property
    def is_square(self) -> bool:
        return self.model.chart_dim == self.h.dim

    def matrix(self, points) -> np.ndarray:
        return self.kappa.components(points)

    def sample(self, count: int = 64, seed: int = 0x5EED) -> np.ndarray:
        return self.model.sample(count, seed)

    def fundamental(self, Y, points) -> np.ndarray:
        if self.model.fiber is not None:
            return self.model.fundamental_field(Y, points)
        return _solve_coframe(self.matrix(points), self.model.structure.embed(Y))

    def as_cartan(self) -> "CartanConnection":
        return CartanConnection(self.model, self.kappa)


@dataclass(frozen=True, eq=False)
class CartanConnection(GeneralizedCartanConnection):
    """A generalized Cartan connection that is an absolute parallelism."""

    def __post_init__(self):
        super().__post_init__()
        if not self.is_square:
            raise DimensionMismatch(f"chart dimension {self.model.chart_dim} differs from dim h = {self.h.dim}")

    def zeta(self, X, points) -> np.ndarray:
        """ζ_X = κ⁻¹(X) at points."""
        return _solve_coframe(self.matrix(points), np.asarray(X, dtype=float))


def _check_coframe(K: np.ndarray) -> None:
    if K.shape[-1] != K.shape[-2]:
        raise SingularCoframe("the coframe is not square")
    cond = np.linalg.cond(K)
    if not np.all(np.isfinite(cond)) or np.max(cond, initial=0.0) > COND_LIMIT:
        raise SingularCoframe(f"coframe condition number {np.max(cond):.3e} exceeds {COND_LIMIT:.0e}")


def _coframe_inverse(K: np.ndarray) -> np.ndarray:
    _check_coframe(K)
    return np.linalg.inv(K)


def _solve_coframe(K: np.ndarray, X: np.ndarray) -> np.ndarray:
    _check_coframe(K)
    X = np.broadcast_to(X, K.shape[:-1])
    return np.linalg.solve(K, X[..., None])[..., 0]


# -- construction ----------------------------------------------------------------------

def _base_map(A, m: int, hdim: int) -> Callable:
    """Normalize A: U -> Hom(R^m, h) to a Taylor-capable evaluator on x."""
    if isinstance(A, PolyMatrix):
        if A.shape != (hdim, m) or A.nvars != m:
            raise DimensionMismatch(f"A must be a {hdim}x{m} polynomial matrix in {m} variables")
        return A
    if isinstance(A, FormField):
        if A.degree != 1 or A.chart_dim != m or A.dim != hdim:
            raise DimensionMismatch("A must be a 1-form on the base with values in h")
        return lambda x: evaluate_at(A, x)
    if callable(A):
        return A
    mat = np.asarray(A, dtype=float)
    if mat.size == 0:
        mat = np.zeros((hdim, m))
    if mat.shape != (hdim, m):
        raise DimensionMismatch(f"constant A must have shape {(hdim, m)}")
    return lambda x: T.lift(np.broadcast_to(mat, T.value(x).shape[:-1] + mat.shape), x) \
        if isinstance(x, Taylor) else np.broadcast_to(mat, x.shape[:-1] + mat.shape)


def make_principal_cartan(model: LocalModel, A=None) -> GeneralizedCartanConnection:
    """κ_(x,a)(ξ, ζ) = Ad(a⁻¹)(A(x)ξ) + a⁻¹ζ on U × K.

    ``A`` may be a PolyMatrix, a base 1-form, a Taylor-capable callable or a
    constant matrix.  Returns a CartanConnection when the chart dimension
    equals dim h.
    """
    if model.fiber is None:
        raise DimensionMismatch("make_principal_cartan needs a model with a group fiber")
    m, h = model.base_dim, model.h
    Afn = _base_map(A if A is not None else np.zeros((h.dim, m)), m, h.dim)
    ad_k_in_h = np.einsum("ai,aks->iks", model.fiber_to_h, h.ad_basis)  # ad_h of fiber basis vectors
    chart = model.fiber
    f2h = model.fiber_to_h

    def fn(z):
        x, s = z[..., :m], z[..., m:]
        vert = T.einsum("ha,...ab->...hb", f2h, chart.left_mc(s))
        if m == 0:
            return vert
        Ax = Afn(x)
        if not isinstance(Ax, Taylor):
            Ax = T.lift(np.asarray(Ax), z)
        horiz = chart.rep_of(s, ad_k_in_h, inverse=True) @ Ax
        return T.concatenate([horiz, vert], axis=-1)

    kappa = FormField.exact(fn, 1, model.chart_dim, h)
    cls = CartanConnection if model.chart_dim == h.dim else GeneralizedCartanConnection
    return cls(model, kappa)


def maurer_cartan(chart: GroupChart, structure: SubalgebraEmbedding | None = None) -> CartanConnection:
    """Left Maurer-Cartan form of the group, as a Cartan connection of type h/g."""
    return make_principal_cartan(LocalModel.group(chart, structure))


# -- curvature -----------------------------------------------------------------------------

def curvature(conn: GeneralizedCartanConnection) -> FormField:
    """K = dκ + ½[κ, κ]."""
    return mc_expression(conn.kappa)


def _scaled_max(expr: np.ndarray, *terms: np.ndarray) -> float:
    scale = max([1.0] + [float(np.abs(t).max(initial=0.0)) for t in terms])
    return float(np.abs(expr).max(initial=0.0)) / scale


def curvature_residual(conn: GeneralizedCartanConnection, points) -> float:
    """max |K| relative to max(1, |dκ|, |½[κ,κ]|)."""
    dk = exterior_derivative(conn.kappa).components(points)
    br = 0.5 * wedge_bracket(conn.kappa, conn.kappa).components(points)
    return _scaled_max(dk + br, dk, br)


def bianchi_residual(conn: GeneralizedCartanConnection, points, allow_fallback: bool = False) -> float:
    """max |dK + [κ, K]| relative to the size of the two terms."""
    if not conn.kappa.is_exact and not allow_fallback:
        raise BackendUnsupported("the Bianchi check needs exact second derivatives; pass allow_fallback=True "
                                 "to use nested differences with a looser tolerance")
    K = curvature(conn)
    dK = exterior_derivative(K).components(points)
    br = wedge_bracket(conn.kappa, K).components(points)
    return _scaled_max(dK + br, dK, br)


def covariant_derivative(conn: GeneralizedCartanConnection, rep: MatrixRep, psi: FormField,
                         points=None, tol: float = 1e-7) -> FormField:
    """d_κ Ψ = dΨ + ρ(κ) ∧ Ψ for horizontal Ψ."""
    if rep.algebra.dim != conn.h.dim:
        raise DimensionMismatch("the representation must be a representation of h")
    if points is None:
        points = conn.sample(16)
    res = horizontality_residual(conn, psi, points)
    if res > tol:
        raise NotHorizontal(f"form is not horizontal (residual {res:.3e})")
    return exterior_derivative(psi) + rho_wedge(conn.kappa, psi, rep)


# -- validators ----------------------------------------------------------------------------

def horizontality_residual(conn: GeneralizedCartanConnection, psi: FormField, points) -> float:
    """max |i_{ζ_Y} Ψ| over a basis of g, relative to max(1, |Ψ|)."""
    if psi.degree == 0 or conn.model.g.dim == 0:
        return 0.0
    comps = psi.components(points)
    n = psi.chart_dim
    worst = 0.0
    for Y in np.eye(conn.model.g.dim):
        v = conn.fundamental(Y, points)
        worst = max(worst, float(np.abs(contract_components(comps, v, n, psi.degree)).max(initial=0.0)))
    return worst / max(1.0, float(np.abs(comps).max(initial=0.0)))


def reproduction_residual(conn: GeneralizedCartanConnection, points) -> float:
    """max |κ(ζ_Y) − Y| over a basis of g."""
    if conn.model.g.dim == 0:
        return 0.0
    K = conn.matrix(points)
    worst = 0.0
    for Y in np.eye(conn.model.g.dim):
        v = conn.fundamental(Y, points)
        got = np.einsum("...hn,...n->...h", K, v)
        worst = max(worst, float(np.abs(got - conn.model.structure.embed(Y)).max(initial=0.0)))
    return worst


def form_equivariance_residual(model: LocalModel, psi: FormField, rep_gens: np.ndarray, points,
                               elements) -> float:
    """max |(r^g)*Ψ − ρ(g⁻¹)Ψ| over points and elements g = exp(Y), relative to max(1, |Ψ|)."""
    points = np.asarray(points, dtype=float)
    p = psi.degree
    base = psi.components(points)
    worst = 0.0
    for Y in np.atleast_2d(elements):
        moved, D = model.right_action(points, Y)
        pulled = np.einsum("...wI,...IK->...wK", psi.components(moved), minors(D, p))
        expected = np.einsum("ab,...bK->...aK", model.structure_Ad_inverse(Y, rep_gens), base)
        worst = max(worst, float(np.abs(pulled - expected).max(initial=0.0)))
    return worst / max(1.0, float(np.abs(base).max(initial=0.0)))


def equivariance_residual(conn: GeneralizedCartanConnection, points, elements) -> float:
    """(r^g)*κ = Ad(g⁻¹)κ at sampled points and structure elements."""
    return form_equivariance_residual(conn.model, conn.kappa, conn.model.g_adjoint_generators(), points, elements)


def _directional_fd(fn: Callable[[np.ndarray], np.ndarray], points: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Central difference of fn along v at points, Richardson-extrapolated to O(h⁴)."""
    nv = np.linalg.norm(v, axis=-1, keepdims=True)
    eps = FD_STEP * (1.0 + np.linalg.norm(points, axis=-1, keepdims=True)) / np.maximum(nv, 1.0)

    def central(h):
        diff = np.asarray(fn(points + h * v)) - np.asarray(fn(points - h * v))
        return diff / (2.0 * h.reshape(h.shape[:-1] + (1,) * (diff.ndim - h.ndim + 1)))

    return (4.0 * central(0.5 * eps) - central(eps)) / 3.0


def infinitesimal_equivariance_residual(conn: GeneralizedCartanConnection, points) -> float:
    """max |L_{ζ_Y}κ + ad(Y)∘κ| over a basis of g, relative to the terms.

    The Lie derivative is i_ζ dκ + d(κ(ζ)), with the second term by central
    differences.
    """
    g = conn.model.g
    if g.dim == 0:
        return 0.0
    points = np.asarray(points, dtype=float)
    n = conn.model.chart_dim
    K = conn.matrix(points)
    dK = exterior_derivative(conn.kappa).components(points)
    worst = 0.0
    scale = 1.0
    for Y in np.eye(g.dim):
        def kz(p, Y=Y):
            return np.einsum("...hn,...n->...h", conn.matrix(p), conn.fundamental(Y, p))

        v = conn.fundamental(Y, points)
        contr = contract_components(dK, v, n, 2)  # (..., h, n)
        grad = np.stack([_directional_fd(kz, points, np.broadcast_to(e, points.shape)) for e in np.eye(n)], axis=-1)
        adY = conn.h.ad(conn.model.structure.embed(Y))
        rhs = adY @ K
        worst = max(worst, float(np.abs(contr + grad + rhs).max(initial=0.0)))
        scale = max(scale, float(np.abs(contr).max(initial=0.0)), float(np.abs(rhs).max(initial=0.0)))
    return worst / scale


def min_singular_value(conn: GeneralizedCartanConnection, points) -> float:
    s = np.linalg.svd(conn.matrix(points), compute_uv=False)
    return float(s.min(initial=np.inf)) if s.size else 0.0


def vector_field_bracket(F: Callable, G: Callable, points) -> np.ndarray:
    """[F, G] = D_F G − D_G F by central differences."""
    points = np.asarray(points, dtype=float)
    f, g = F(points), G(points)
    return _directional_fd(G, points, f) - _directional_fd(F, points, g)


def bracket_axiom_residual(conn: CartanConnection, points) -> float:
    """max |[ζ_X, ζ_Y] − ζ_[X,Y]| for X in a basis of h and Y in a basis of g."""
    h, emb = conn.h, conn.model.structure
    worst, scale = 0.0, 1.0
    for X in np.eye(h.dim):
        for Yg in np.eye(emb.sub.dim):
            Y = emb.embed(Yg)
            lhs = vector_field_bracket(lambda p: conn.zeta(X, p), lambda p: conn.zeta(Y, p), points)
            rhs = conn.zeta(h.bracket(X, Y), points)
            worst = max(worst, float(np.abs(lhs - rhs).max(initial=0.0)))
            scale = max(scale, float(np.abs(lhs).max(initial=0.0)), float(np.abs(rhs).max(initial=0.0)))
    return worst / scale


def bracket_defect_terms(conn: CartanConnection, X, Y, points) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(ζ(K(ζ_X, ζ_Y)), [ζ_X, ζ_Y], ζ_[X,Y]) at points."""
    K = curvature(conn)
    zx, zy = conn.zeta(X, points), conn.zeta(Y, points)
    kval = K(points, zx, zy)
    lhs = conn.zeta(kval, points)
    vf = vector_field_bracket(lambda p: conn.zeta(X, p), lambda p: conn.zeta(Y, p), points)
    return lhs, vf, conn.zeta(conn.h.bracket(X, Y), points)


def bracket_defect_residual(conn: CartanConnection, points, pairs=None, seed: int = 0) -> float:
    """max |ζ(K(ζ_X, ζ_Y)) + [ζ_X, ζ_Y] − ζ_[X,Y]| for random X, Y ∈ h, relative to the terms.

    With K = dκ + ½[κ,κ] and the standard bracket of vector fields,
    K(ζ_X, ζ_Y) = [X, Y] − κ([ζ_X, ζ_Y]), which fixes the sign of the
    vector-field term.
    """
    if pairs is None:
        rng = np.random.default_rng(seed)
        pairs = [(rng.normal(size=conn.h.dim), rng.normal(size=conn.h.dim)) for _ in range(3)]
    worst, scale = 0.0, 1.0
    for X, Y in pairs:
        lhs, vf, zb = bracket_defect_terms(conn, np.asarray(X), np.asarray(Y), points)
        worst = max(worst, float(np.abs(lhs + vf - zb).max(initial=0.0)))
        scale = max(scale, *(float(np.abs(t).max(initial=0.0)) for t in (lhs, vf, zb)))
    return worst / scale


# -- curvature function --------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CurvatureFunction:
    """k(u)(X, Y) = K(ζ_X(u), ζ_Y(u)) as a coefficient tensor k[..., w, i, j]."""

    conn: CartanConnection
    K: FormField

    def __call__(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        Kt = full_tensor(self.K.components(points), self.conn.model.chart_dim, 2)  # (..., w, n, n)
        Zinv = _coframe_inverse(self.conn.matrix(points))  # columns ζ_{e_i}
        return np.einsum("...wpq,...pi,...qj->...wij", Kt, Zinv, Zinv)

    def antisymmetry_residual(self, points) -> float:
        k = self(points)
        return float(np.abs(k + np.swapaxes(k, -1, -2)).max(initial=0.0))

    def constancy_residual(self, points) -> float:
        """max over sample pairs of |k(u) − k(u')|."""
        k = self(points).reshape(len(points), -1)
        return float((k.max(axis=0) - k.min(axis=0)).max(initial=0.0))


def curvature_function(conn: CartanConnection) -> CurvatureFunction:
    if not isinstance(conn, CartanConnection):
        conn = conn.as_cartan()
    return CurvatureFunction(conn, curvature(conn))


# -- reductive splitting ----------------------------------------------------------------------

def reductive_split(conn: GeneralizedCartanConnection, complement_basis=None,
                    tol: float = 1e-9) -> tuple[FormField, FormField]:
    """Split κ = θ + ω along h = V ⊕ g; requires [g, V] ⊂ V."""
    emb = conn.model.structure
    V = emb.complement_basis if complement_basis is None else np.asarray(complement_basis, dtype=float)
    if V is None:
        raise NotReductive("no complement basis given")
    V = V.reshape(conn.h.dim, -1)
    res = ad_invariance_residual(conn.h, emb, V)
    if res > tol:
        raise NotReductive(f"[g, V] is not contained in V (residual {res:.3e})")
    P = np.hstack([emb.inclusion, V])
    Pinv = np.linalg.inv(P)
    gdim = emb.sub.dim
    omega = conn.kappa.linear(Pinv[:gdim], target=emb.sub)
    theta = conn.kappa.linear(Pinv[gdim:], target=V.shape[1])
    return theta, omega


def ad_invariance_residual(h: LieAlgebra, emb: SubalgebraEmbedding, V: np.ndarray) -> float:
    """Size of the g-component of [g, V] in the decomposition h = g ⊕ V."""
    P = np.hstack([emb.inclusion, V])
    Pinv = np.linalg.inv(P)
    br = h.bracket(emb.inclusion.T[:, None, :], V.T[None, :, :])  # (dim g, dim V, dim h)
    coords = br @ Pinv.T
    return float(np.abs(coords[..., : emb.sub.dim]).max(initial=0.0))


def theta_ranks(theta: FormField, points) -> np.ndarray:
    """Pointwise rank of θ; equals dim V everywhere when θ is strictly horizontal."""
    return np.linalg.matrix_rank(theta.components(points), tol=1e-9)


# -- validation suite ----------------------------------------------------------------------

@dataclass(frozen=True)
class Tolerances:
    reproduction: float = 1e-8
    equivariance: float = 1e-7
    infinitesimal: float = 1e-5
    bracket_axiom: float = 1e-5
    horizontality: float = 1e-6
    curvature_flat: float = 1e-8
    bianchi: float = 1e-7
    bracket_defect: float = 1e-4


def validate(conn: GeneralizedCartanConnection, points=None, elements=None, tol: Tolerances = Tolerances(),
             flat: bool = False, seed: int = 0x5EED) -> list[Check]:
    """Residual checks for the defining properties of (generalized) Cartan connections."""
    if points is None:
        points = conn.sample(32, seed)
    model = conn.model
    checks = [Check("reproduces_fundamental_fields", reproduction_residual(conn, points), tol.reproduction,
                    "reproduction")]
    if model.fiber is not None and model.g.dim:
        if elements is None:
            elements = model.sample_structure(4, seed)
        checks.append(Check("equivariance", equivariance_residual(conn, points, elements), tol.equivariance,
                            "equivariance"))
    if model.g.dim:
        checks.append(Check("infinitesimal_equivariance", infinitesimal_equivariance_residual(conn, points),
                            tol.infinitesimal, "infinitesimal_equivariance"))
    K = curvature(conn)
    if model.g.dim:
        checks.append(Check("curvature_horizontal", horizontality_residual(conn, K, points), tol.horizontality,
                            "curvature_horizontal"))
    if model.fiber is not None and model.g.dim:
        checks.append(Check("curvature_equivariant",
                            form_equivariance_residual(model, K, model.g_adjoint_generators(), points, elements),
                            tol.horizontality, "curvature_equivariant"))
    if conn.kappa.is_exact:
        checks.append(Check("bianchi", bianchi_residual(conn, points), tol.bianchi, "bianchi_identity"))
    checks.append(Check("curvature_norm", curvature_residual(conn, points), tol.curvature_flat if flat else None,
                        "curvature"))
    if isinstance(conn, CartanConnection):
        smin = min_singular_value(conn, points)
        checks.append(Check("min_singular_value", smin, None, "absolute_parallelism"))
        if smin > 0:
            checks.append(Check("bracket_axiom", bracket_axiom_residual(conn, points), tol.bracket_axiom,
                                "bracket_axiom"))
            checks.append(Check("bracket_defect", bracket_defect_residual(conn, points), tol.bracket_defect,
                                "bracket_defect_identity"))
    return checks
