"""Truncated jets at 0 of maps and vector fields on V = R^n, and the flat model of a linear group.

A jet of order k is stored as per-monomial coefficients ``c[m, i]`` over the
monomials of degree ≤ k in n variables (the Taylor engine's basis), so the
map is x ↦ Σ_m c[m] x^m.  Jets of diffeomorphisms have c[0] = 0.

Brackets use the jet convention [X, Y] = −(DY·X − DX·Y): on linear fields
x ↦ Ax it is the matrix commutator, and it is the derivative of conjugation
in the jet group.  ``jet_Ad`` is the pullback Dφ⁻¹·(X∘φ).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import taylor as T
from .cartan import CartanConnection, LocalModel, make_principal_cartan
from .errors import DimensionMismatch, DimensionOverflow, InvalidAlgebra, SingularLinearPart
from .forms import FormField
from .lie_core import CLOSURE_TOL, LieAlgebra, MatrixRep, SubalgebraEmbedding
from .matrix_group import GroupChart
from .poly import monomial_values
from .prolongation import LinearLieAlgebra, ProlongationTable, prolong
from .taylor import Taylor

MAX_FLAT_ORDER = 3
MAX_FLAT_DIM = 3
LINEAR_COND_LIMIT = 1e12
LIE_SERIES_TERMS = 40


@dataclass(frozen=True, eq=False)
class Jet:
    """Polynomial map V → V truncated at degree k; ``coeffs`` has shape (basis size, n)."""

    n: int
    k: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (T.basis(self.n, self.k).size, self.n):
            raise DimensionMismatch(f"jet coefficients must have shape {(T.basis(self.n, self.k).size, self.n)}")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def basis(self):
        return T.basis(self.n, self.k)

    @property
    def taylor(self) -> Taylor:
        return Taylor(np.array(self.coeffs), self.basis)

    @property
    def constant(self) -> np.ndarray:
        return self.coeffs[0]

    @property
    def linear(self) -> np.ndarray:
        """Degree-1 block L with L[i, j] = ∂x_j of component i."""
        return self.coeffs[1: 1 + self.n].T.copy()

    def degree_part(self, d: int) -> np.ndarray:
        mask = self.basis.degrees == d
        out = np.zeros_like(self.coeffs)
        out[mask] = self.coeffs[mask]
        return out

    def __call__(self, x) -> np.ndarray:
        """Evaluate the polynomial at points of shape (..., n)."""
        monos = [tuple(int(v) for v in e) for e in self.basis.exponents]
        return monomial_values(monos, np.asarray(x, dtype=float), self.n) @ self.coeffs

    def _new(self, coeffs) -> "Jet":
        return type(self)(self.n, self.k, coeffs)

    def __add__(self, other: "Jet") -> "Jet":
        _same_shape(self, other)
        return self._new(self.coeffs + other.coeffs)

    def __sub__(self, other: "Jet") -> "Jet":
        _same_shape(self, other)
        return self._new(self.coeffs - other.coeffs)

    def __mul__(self, s: float) -> "Jet":
        return self._new(self.coeffs * float(s))

    __rmul__ = __mul__

    def __neg__(self) -> "Jet":
        return self._new(-self.coeffs)

    def max_abs(self) -> float:
        return float(np.abs(self.coeffs).max(initial=0.0))


class JetElement(Jet):
    """Jet at 0 of a local diffeomorphism fixing 0."""

    def __post_init__(self):
        super().__post_init__()
        if np.any(self.coeffs[0] != 0.0):
            raise DimensionMismatch("a jet of a diffeomorphism fixing 0 has zero constant term")

    @classmethod
    def identity(cls, n: int, k: int) -> "JetElement":
        return cls.linear_map(np.eye(n), k)

    @classmethod
    def linear_map(cls, A, k: int) -> "JetElement":
        A = np.atleast_2d(np.asarray(A, dtype=float))
        n = A.shape[0]
        c = np.zeros((T.basis(n, k).size, n))
        if k >= 1:
            c[1: 1 + n] = A.T
        return cls(n, k, c)

    @classmethod
    def from_taylor(cls, t: Taylor) -> "JetElement":
        c = np.array(t.c)
        c[0] = 0.0
        return cls(t.nvars, t.order, c)


class JetVectorField(Jet):
    """Jet at 0 of a vector field; a nonzero constant term is allowed."""

    @classmethod
    def zero(cls, n: int, k: int) -> "JetVectorField":
        return cls(n, k, np.zeros((T.basis(n, k).size, n)))

    @classmethod
    def from_terms(cls, n: int, k: int, terms: dict) -> "JetVectorField":
        """``terms`` maps (component, exponent tuple) to a coefficient."""
        b = T.basis(n, k)
        c = np.zeros((b.size, n))
        for (i, e), v in terms.items():
            c[b.index[tuple(e)], i] += v
        return cls(n, k, c)

    @classmethod
    def linear_field(cls, A, k: int) -> "JetVectorField":
        return cls(*_linear_args(A, k))

    @classmethod
    def constant_field(cls, v, k: int) -> "JetVectorField":
        v = np.asarray(v, dtype=float)
        c = np.zeros((T.basis(v.size, k).size, v.size))
        c[0] = v
        return cls(v.size, k, c)

    @classmethod
    def from_symmetric(cls, t, k: int) -> "JetVectorField":
        """x ↦ t(x, .., x)/p! for t[a, i1..ip] symmetric in its last p slots."""
        t = np.asarray(t, dtype=float)
        n, p = t.shape[0], t.ndim - 1
        b = T.basis(n, k)
        c = np.zeros((b.size, n))
        if p > k:
            return cls(n, k, c)
        for idx, e in enumerate(b.exponents):
            if e.sum() != p:
                continue
            slots = tuple(i for i in range(n) for _ in range(e[i]))
            mult = math.factorial(p) / math.prod(math.factorial(int(v)) for v in e)
            c[idx] = t[(slice(None),) + slots] * mult / math.factorial(p)
        return cls(n, k, c)

    @classmethod
    def from_taylor(cls, t: Taylor) -> "JetVectorField":
        return cls(t.nvars, t.order, np.array(t.c))


def _linear_args(A, k: int):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    c = np.zeros((T.basis(n, k).size, n))
    if k >= 1:
        c[1: 1 + n] = A.T
    return n, k, c


def _same_shape(a: Jet, b: Jet) -> None:
    if a.n != b.n or a.k != b.k:
        raise DimensionMismatch(f"jets of shapes (n={a.n}, k={a.k}) and (n={b.n}, k={b.k}) do not match")


# -- jet group -----------------------------------------------------------------------------

def _substitute(a: Jet, b: Taylor) -> Taylor:
    """a(b) truncated at the order of b; exact when b has zero constant term."""
    monos = [tuple(int(v) for v in e) for e in a.basis.exponents]
    vals = monomial_values(monos, b, a.n)
    return T.einsum("...m,mj->...j", vals, a.coeffs)


def jet_compose(a: JetElement, b: JetElement) -> JetElement:
    """j(a ∘ b)."""
    _same_shape(a, b)
    return JetElement.from_taylor(_substitute(a, b.taylor))


def _check_linear(a: Jet) -> np.ndarray:
    L = a.linear
    if a.k < 1 or not np.isfinite(np.linalg.cond(L)) or np.linalg.cond(L) > LINEAR_COND_LIMIT:
        raise SingularLinearPart("the degree-1 block of the jet is not invertible")
    return L


def jet_invert(a: JetElement) -> JetElement:
    """j(a⁻¹) by Newton iteration b ← b − L⁻¹(a(b) − id); each pass fixes at least one more degree."""
    L = _check_linear(a)
    Linv = np.linalg.inv(L)
    ident = JetElement.identity(a.n, a.k).taylor
    b = JetElement.linear_map(Linv, a.k).taylor
    for _ in range(a.k):
        err = _substitute(a, b) - ident
        b = b - T.einsum("ij,...j->...i", Linv, err)
    return JetElement.from_taylor(b)


def _padded_jacobian(X: Jet) -> Taylor:
    """DX as an order-k Taylor matrix (..., i, j) = ∂_j X^i; the degree-k part is zero."""
    g = X.taylor.grad()  # order k−1, shape (n, n) with the derivative index last
    c = np.zeros((X.basis.size, X.n, X.n))
    c[: g.c.shape[0]] = g.c
    return Taylor(c, X.basis)


def _apply(M: Taylor, v: Taylor) -> Taylor:
    return T.einsum("...ij,...j->...i", M, v)


def vf_bracket(X: JetVectorField, Y: JetVectorField) -> JetVectorField:
    """Vector-field bracket DY·X − DX·Y, truncated at degree k."""
    _same_shape(X, Y)
    if X.k == 0:
        return JetVectorField.zero(X.n, 0)
    out = _apply(_padded_jacobian(Y), X.taylor) - _apply(_padded_jacobian(X), Y.taylor)
    return JetVectorField.from_taylor(out)


def jet_bracket(X: JetVectorField, Y: JetVectorField) -> JetVectorField:
    """[X, Y] = −(DY·X − DX·Y)."""
    return -vf_bracket(X, Y)


def lie_derivative(X: JetVectorField, F: Jet) -> Taylor:
    """DF·X as an order-k Taylor vector."""
    return _apply(_padded_jacobian(F), X.taylor)


def jet_exp(X: JetVectorField) -> JetElement:
    """j(Fl^X_1) for X vanishing at 0, by scaling and squaring of the Lie series Σ L_X^j(id)/j!."""
    if np.any(X.constant != 0.0):
        raise DimensionMismatch("jet_exp needs a vector field vanishing at 0")
    n, k = X.n, X.k
    norm = float(np.abs(X.coeffs).sum(axis=1).max(initial=0.0))
    s = max(0, int(math.ceil(math.log2(norm))) + 1) if norm > 0 else 0
    Xs = X * (0.5 ** s)
    term = JetVectorField.linear_field(np.eye(n), k)
    total = term.taylor
    for j in range(1, LIE_SERIES_TERMS):
        term = JetVectorField.from_taylor(lie_derivative(Xs, term) * (1.0 / j))
        total = total + term.taylor
        if term.max_abs() < 1e-18:
            break
    out = JetElement.from_taylor(total)
    for _ in range(s):
        out = jet_compose(out, out)
    return out


def jet_Ad(a: JetElement, X: JetVectorField) -> JetVectorField:
    """Pullback Dφ⁻¹ · (X ∘ φ) of X by the diffeomorphism jet φ = a."""
    _same_shape(a, X)
    _check_linear(a)
    Xa = _substitute(X, a.taylor)
    return JetVectorField.from_taylor(_apply(T.inv(_padded_jacobian(a)), Xa))


# -- truncated a_∞ -------------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TruncatedAlgebra:
    """a_k = V ⊕ g^(0) ⊕ … ⊕ g^(k−1) realized by polynomial vector fields of degree ≤ k."""

    algebra: LieAlgebra
    fields: tuple[JetVectorField, ...]
    degrees: tuple[int, ...]
    closure_residual: float

    @property
    def n(self) -> int:
        return self.fields[0].n

    @property
    def dim(self) -> int:
        return self.algebra.dim

    def indices(self, degree: int) -> tuple[int, ...]:
        return tuple(i for i, d in enumerate(self.degrees) if d == degree)

    @property
    def fiber_indices(self) -> tuple[int, ...]:
        return tuple(i for i, d in enumerate(self.degrees) if d >= 1)


def truncated_algebra(g: LinearLieAlgebra, k: int, table: ProlongationTable | None = None) -> TruncatedAlgebra:
    """Basis fields of a_k and the bracket table of jet_bracket on them."""
    if k < 1:
        raise ValueError("k must be at least 1")
    n = g.n
    if table is None or table.k_max < k - 1:
        table = prolong(g, max(1, k - 1)) if g.dim else None
    fields, degrees = [], []
    for i in range(n):
        fields.append(JetVectorField.constant_field(np.eye(n)[i], k))
        degrees.append(0)
    for d in range(k):
        B = g.basis if d == 0 else (table.basis(d) if table is not None and d <= table.k_max else np.zeros((0,)))
        for t in B:
            fields.append(JetVectorField.from_symmetric(t, k))
            degrees.append(d + 1)
    F = np.array([f.coeffs.ravel() for f in fields]).T
    m = len(fields)
    c = np.zeros((m, m, m))
    worst = 0.0
    for i in range(m):
        for j in range(i + 1, m):
            v = jet_bracket(fields[i], fields[j]).coeffs.ravel()
            sol = np.linalg.lstsq(F, v, rcond=None)[0]
            worst = max(worst, float(np.abs(F @ sol - v).max(initial=0.0)))
            sol[np.abs(sol) < 1e-13] = 0.0
            c[:, i, j], c[:, j, i] = sol, -sol
    if worst > CLOSURE_TOL:
        raise InvalidAlgebra(f"truncated brackets leave the span of V ⊕ g^(0..{k - 1}) (residual {worst:.3e})")
    names = [f"v{i + 1}" for i in range(n)] + [f"g{d}_{j + 1}" for d in range(k) for j in range(degrees.count(d + 1))]
    alg = LieAlgebra(m, c, tuple(names), f"a{k}({g.name})")
    return TruncatedAlgebra(alg, tuple(fields), tuple(degrees), worst)


def g_infinity_truncated(g: LinearLieAlgebra, k: int, table: ProlongationTable | None = None) -> LieAlgebra:
    """a_k as a LieAlgebra with basis (V, g^(0), .., g^(k−1)) and the jet bracket.

    Raises InvalidAlgebra when the dropped degree-(k+1) terms feed back through
    brackets with V and break the Jacobi identity (possible only if g^(k) ≠ 0).
    """
    return truncated_algebra(g, k, table).algebra


# -- flat model -----------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FlatModel:
    connection: CartanConnection
    algebra: TruncatedAlgebra


def flat_model_connection(g: LinearLieAlgebra, k: int, table: ProlongationTable | None = None) -> FlatModel:
    """κ₀ = Ad(a⁻¹)dx + a⁻¹da on V × G_k, the Maurer-Cartan form of A_k pulled back by (x, a) ↦ exp(x)·a.

    G_k carries second-kind coordinates a(s) = exp(S_k)···exp(S_1) with S_d in
    the degree-d part g^(d−1), and acts on a_k by the adjoint representation.
    """
    n = g.n
    if k > MAX_FLAT_ORDER or n > MAX_FLAT_DIM:
        raise DimensionOverflow(f"flat models are limited to k ≤ {MAX_FLAT_ORDER} and n ≤ {MAX_FLAT_DIM}")
    ta = truncated_algebra(g, k, table)
    a = ta.algebra
    box = (-0.5 * np.ones(n), 0.5 * np.ones(n))
    if g.dim == 0:
        zero = LieAlgebra(0, np.zeros((0, 0, 0)))
        model = LocalModel.bare(a, SubalgebraEmbedding(a, zero, np.zeros((n, 0))), box)
        kappa = FormField.constant(np.eye(n), 1, n, a)
        return FlatModel(CartanConnection(model, kappa), ta)
    fib = list(ta.fiber_indices)
    sub_c = a.structure[np.ix_(fib, fib, fib)]
    sub = LieAlgebra(len(fib), sub_c, tuple(a.basis_names[i] for i in fib), f"g{k}({g.name})")
    inc = np.eye(a.dim)[:, fib]
    rep = MatrixRep(sub, a.ad_basis[fib])
    pos = {i: p for p, i in enumerate(fib)}
    blocks = tuple(tuple(pos[i] for i in ta.indices(d)) for d in range(1, k + 1) if ta.indices(d))
    chart = GroupChart(sub, rep, blocks=blocks if len(blocks) > 1 else None)
    model = LocalModel.principal(a, chart, inc, n, box)
    conn = make_principal_cartan(model, np.eye(a.dim)[:, :n])
    return FlatModel(conn.as_cartan(), ta)


# -- flows --------------------------------------------------------------------------------------

def rk4_flow(X: JetVectorField, x0, t: float = 1.0, steps: int = 200) -> np.ndarray:
    """Classical RK4 for dx/dt = X(x) on points of shape (..., n)."""
    x = np.asarray(x0, dtype=float).copy()
    h = t / steps
    for _ in range(steps):
        k1 = X(x)
        k2 = X(x + 0.5 * h * k1)
        k3 = X(x + 0.5 * h * k2)
        k4 = X(x + h * k3)
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return x


def flow_residual(X: JetVectorField, points, steps: int = 200) -> float:
    """max |Fl^X_1(x) − jet_exp(X)(x)| over the points."""
    pts = np.asarray(points, dtype=float)
    return float(np.abs(rk4_flow(X, pts, 1.0, steps) - jet_exp(X)(pts)).max(initial=0.0))


def ball_points(n: int, radius: float, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(count, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return d * radius * rng.uniform(0.2, 1.0, size=(count, 1))


def group_axiom_residuals(n: int, k: int, seed: int = 0x5EED, scale: float = 0.5) -> dict[str, float]:
    """Associativity, identity and inverse residuals on random jets, plus Ad homomorphism checks."""
    rng = np.random.default_rng(seed)

    def rand_elem():
        c = rng.normal(scale=scale, size=(T.basis(n, k).size, n))
        c[0] = 0.0
        c[1: 1 + n] = (np.eye(n) + rng.normal(scale=0.2, size=(n, n))).T
        return JetElement(n, k, c)

    def rand_field():
        c = rng.normal(scale=scale, size=(T.basis(n, k).size, n))
        c[0] = 0.0
        return JetVectorField(n, k, c)

    a, b, c = rand_elem(), rand_elem(), rand_elem()
    e = JetElement.identity(n, k)
    X, Y, Z = rand_field(), rand_field(), rand_field()
    assoc = (jet_compose(jet_compose(a, b), c) - jet_compose(a, jet_compose(b, c))).max_abs()
    ident = max((jet_compose(a, e) - a).max_abs(), (jet_compose(e, a) - a).max_abs())
    inv = max((jet_compose(a, jet_invert(a)) - e).max_abs(), (jet_compose(jet_invert(a), a) - e).max_abs())
    ad_inv = (jet_Ad(a, jet_Ad(jet_invert(a), X)) - X).max_abs()
    ad_hom = (jet_Ad(a, jet_bracket(X, Y)) - jet_bracket(jet_Ad(a, X), jet_Ad(a, Y))).max_abs()
    ad_mult = (jet_Ad(jet_compose(a, b), X) - jet_Ad(b, jet_Ad(a, X))).max_abs()
    jac = (jet_bracket(X, jet_bracket(Y, Z)) + jet_bracket(Y, jet_bracket(Z, X))
           + jet_bracket(Z, jet_bracket(X, Y))).max_abs()
    return {"associativity": assoc, "identity": ident, "inverse": inv, "ad_inverse": ad_inv,
            "ad_bracket": ad_hom, "ad_composition": ad_mult, "jacobi": jac}
