"""Vector- and Lie-algebra-valued differential forms on chart domains.

A p-form on an n-dimensional chart is stored by its components over strictly
increasing multi-indices I, so that ``omega(v_1..v_p) = sum_I omega_I det(v[I])``.
With this normalization the wedge product of a p-form and a q-form is the
1/(p! q!) shuffle sum, and for 1-forms ``[phi, psi](X, Y) = [phi X, psi Y] -
[phi Y, psi X]``.

Backends
--------
``poly``     components are polynomials; d and wedge act symbolically.
``exact``    components come from an evaluator that accepts Taylor
             expansions, so nested derivatives are exact.
``sampled``  components come from a black-box numpy evaluator; d uses
             central differences.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.stats import qmc

from . import taylor as T
from .errors import BackendUnsupported, DimensionMismatch, TargetMismatch
from .lie_core import LieAlgebra, MatrixRep, MultilinearFunction
from .poly import Poly, evaluate_many, monomial_values
from .taylor import Taylor, basis

POLY, EXACT, SAMPLED = "poly", "exact", "sampled"

FD_STEP = 1e-4
FD_STEP_NESTED = 1e-3


# -- multi-index tables --------------------------------------------------------------

@lru_cache(maxsize=None)
def combos(n: int, p: int) -> tuple[tuple[int, ...], ...]:
    if p < 0 or p > n:
        return ()
    return tuple(itertools.combinations(range(n), p))


@lru_cache(maxsize=None)
def combo_index(n: int, p: int) -> dict[tuple[int, ...], int]:
    return {c: i for i, c in enumerate(combos(n, p))}


def ncomp(n: int, p: int) -> int:
    return math.comb(n, p) if 0 <= p <= n else 0


@lru_cache(maxsize=None)
def _d_matrix(n: int, p: int) -> np.ndarray:
    """(d omega)_J = sum_r (-1)^r d_{J_r} omega_{J without J_r}, as a matrix on (I, j) pairs."""
    src = combo_index(n, p)
    D = np.zeros((ncomp(n, p) * n, ncomp(n, p + 1)))
    for Jk, J in enumerate(combos(n, p + 1)):
        for r, j in enumerate(J):
            I = J[:r] + J[r + 1:]
            D[src[I] * n + j, Jk] += (-1) ** r
    return D


@lru_cache(maxsize=None)
def _wedge_table(n: int, p: int, q: int):
    """Gather indices and signed scatter matrix for the wedge of a p- and a q-form."""
    out = combo_index(n, p + q)
    Ii, Ki, Ji, sg = [], [], [], []
    ia, ib = combo_index(n, p), combo_index(n, q)
    for I in combos(n, p):
        for K in combos(n, q):
            if set(I) & set(K):
                continue
            seq = I + K
            J = tuple(sorted(seq))
            perm = [J.index(v) for v in seq]
            Ii.append(ia[I])
            Ki.append(ib[K])
            Ji.append(out[J])
            sg.append(_perm_sign(perm))
    S = np.zeros((len(Ii), ncomp(n, p + q)))
    for l, (j, s) in enumerate(zip(Ji, sg)):
        S[l, j] = s
    return np.array(Ii, dtype=int), np.array(Ki, dtype=int), S


@lru_cache(maxsize=None)
def _contract_table(n: int, p: int):
    """(i_v omega)_{I'} = sum_j sign * v_j * omega_{J}, J = sorted(j + I')."""
    src = combo_index(n, p)
    rows = []
    for Ik, I in enumerate(combos(n, p - 1)):
        for j in range(n):
            if j in I:
                continue
            J = tuple(sorted(I + (j,)))
            rows.append((Ik, j, src[J], (-1) ** J.index(j)))
    return rows


def _perm_sign(perm: Sequence[int]) -> int:
    perm = list(perm)
    sign = 1
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


# -- numeric helpers on component arrays ------------------------------------------------

def evaluate_components(comps: np.ndarray, vectors: Sequence[np.ndarray]) -> np.ndarray:
    """Evaluate forms given by components (..., w, N) on p vectors (..., n)."""
    comps = np.asarray(comps)
    p = len(vectors)
    if p == 0:
        return comps[..., 0]
    V = np.stack([np.asarray(v, dtype=float) for v in vectors], axis=-1)  # (..., n, p)
    n = V.shape[-2]
    idx = np.array(combos(n, p), dtype=int).reshape(-1, p)
    sub = V[..., idx, :]  # (..., N, p, p)
    minors = np.linalg.det(sub)
    return np.einsum("...wN,...N->...w", comps, minors)


def contract_components(comps: np.ndarray, v: np.ndarray, n: int, p: int) -> np.ndarray:
    """Interior product i_v on component arrays (numeric)."""
    comps = np.asarray(comps)
    v = np.asarray(v, dtype=float)
    out = np.zeros(comps.shape[:-1] + (ncomp(n, p - 1),))
    for Ik, j, J, s in _contract_table(n, p):
        out[..., Ik] += s * v[..., j, None] * comps[..., J]
    return out


def full_tensor(comps: np.ndarray, n: int, p: int) -> np.ndarray:
    """Expand components (..., w, N) to the full alternating array (..., w, n, ..., n)."""
    comps = np.asarray(comps)
    out = np.zeros(comps.shape[:-1] + (n,) * p)
    for k, I in enumerate(combos(n, p)):
        for perm in itertools.permutations(range(p)):
            out[(...,) + tuple(I[t] for t in perm)] = _perm_sign(perm) * comps[..., k]
    return out


def minors(L, p: int):
    """p x p minors of matrices L (..., a, b): result (..., C(a,p), C(b,p)). Taylor aware."""
    val = T.value(L)
    a, b = val.shape[-2], val.shape[-1]
    if p == 0:
        ones = np.ones(val.shape[:-2] + (1, 1))
        return T.lift(ones, L) if isinstance(L, Taylor) else ones
    rows = np.array(combos(a, p), dtype=int).reshape(-1, p)
    cols = np.array(combos(b, p), dtype=int).reshape(-1, p)
    total = None
    for perm in itertools.permutations(range(p)):
        term = None
        for t in range(p):
            entry = L[..., rows[:, t][:, None], cols[:, perm[t]][None, :]]
            term = entry if term is None else term * entry
        term = term * float(_perm_sign(perm))
        total = term if total is None else total + term
    return total


def sample_points(lo, hi, count: int, seed: int, margin: float = 0.1) -> np.ndarray:
    """Deterministic scrambled Halton points inside the box shrunk by ``margin``."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    d = lo.size
    if d == 0:
        return np.zeros((count, 0))
    u = qmc.Halton(d=d, scramble=True, seed=np.random.default_rng(seed)).random(count)
    width = hi - lo
    return lo + width * (margin + (1.0 - 2.0 * margin) * u)


# -- the form type -----------------------------------------------------------------------

Target = LieAlgebra | int


def target_dim(target: Target) -> int:
    return target.dim if isinstance(target, LieAlgebra) else int(target)


@dataclass(frozen=True, eq=False)
class FormField:
    """Alternating p-form on an n-dimensional chart with values in R^w or an algebra."""

    degree: int
    chart_dim: int
    target: Target
    backend: str
    taylor_fn: Callable[[Taylor], Taylor] | None = None
    numeric_fn: Callable[[np.ndarray], np.ndarray] | None = None
    depth: int = 0
    fd_level: int = 0
    poly: Mapping[tuple[int, int], Poly] | None = None

    # -- basic data --
    @property
    def dim(self) -> int:
        return target_dim(self.target)

    @property
    def ncomp(self) -> int:
        return ncomp(self.chart_dim, self.degree)

    @property
    def algebra(self) -> LieAlgebra | None:
        return self.target if isinstance(self.target, LieAlgebra) else None

    @property
    def is_exact(self) -> bool:
        return self.backend in (POLY, EXACT)

    def taylor(self, x: Taylor) -> Taylor:
        """Components at seeded chart variables; order drops by ``depth``."""
        if not self.is_exact:
            raise BackendUnsupported("sampled forms have no exact derivative information")
        return self.taylor_fn(x)

    def components(self, points) -> np.ndarray:
        """Components at points (..., n) as an array (..., w, N)."""
        points = np.asarray(points, dtype=float)
        if points.shape[-1] != self.chart_dim:
            raise DimensionMismatch(f"points need {self.chart_dim} coordinates, got {points.shape[-1]}")
        if self.is_exact:
            return self.taylor_fn(Taylor.variables(points, self.depth)).value
        return np.asarray(self.numeric_fn(points))

    def __call__(self, points, *vectors) -> np.ndarray:
        if len(vectors) != self.degree:
            raise DimensionMismatch(f"a {self.degree}-form takes {self.degree} vectors")
        return evaluate_components(self.components(points), vectors)

    def tensor(self, points) -> np.ndarray:
        return full_tensor(self.components(points), self.chart_dim, self.degree)

    def matrix(self, points) -> np.ndarray:
        """For 1-forms: the (..., w, n) matrix of values on coordinate vectors."""
        if self.degree != 1:
            raise DimensionMismatch("matrix() is defined for 1-forms")
        return self.components(points)

    def with_target(self, target: Target) -> "FormField":
        if target_dim(target) != self.dim:
            raise TargetMismatch("new target has a different dimension")
        return _replace(self, target=target)

    # -- constructors --
    @classmethod
    def from_poly(cls, terms: Mapping[tuple[int, Sequence[int]], Poly], degree: int, chart_dim: int,
                  target: Target) -> "FormField":
        """Polynomial form from {(target index, multi-index): polynomial}."""
        index = combo_index(chart_dim, degree)
        w = target_dim(target)
        store: dict[tuple[int, int], Poly] = {}
        for (k, I), p in terms.items():
            I = tuple(int(i) for i in I)
            if tuple(sorted(I)) != I or len(set(I)) != len(I):
                raise DimensionMismatch(f"multi-index {I} must be strictly increasing")
            if I not in index or not 0 <= k < w:
                raise DimensionMismatch(f"term ({k}, {I}) is out of range")
            if p.nvars != chart_dim:
                raise DimensionMismatch("coefficient polynomials must live on the chart")
            key = (int(k), index[I])
            store[key] = store[key] + p if key in store else p
        store = {k: p for k, p in store.items() if not p.is_zero()}
        return _poly_form(store, degree, chart_dim, target)

    @classmethod
    def from_literal(cls, lit: Mapping, chart_dim: int, target: Target) -> "FormField":
        degree = int(lit["degree"])
        terms = {}
        for t in lit.get("terms", []):
            key = (int(t.get("target_index", 0)), tuple(t["multi_index"]))
            p = Poly.from_literal(t["coeff_poly"], chart_dim)
            terms[key] = terms[key] + p if key in terms else p
        return cls.from_poly(terms, degree, chart_dim, target)

    def to_literal(self) -> dict:
        if self.backend != POLY:
            raise BackendUnsupported("only polynomial forms have a literal")
        cs = combos(self.chart_dim, self.degree)
        terms = [{"multi_index": list(cs[I]), "coeff_poly": p.to_literal(), "target_index": k}
                 for (k, I), p in sorted(self.poly.items())]
        kind = "h" if isinstance(self.target, LieAlgebra) else ("scalar" if self.dim == 1 else "V")
        return {"degree": self.degree, "target": kind, "terms": terms}

    @classmethod
    def constant(cls, comps, degree: int, chart_dim: int, target: Target) -> "FormField":
        comps = np.asarray(comps, dtype=float).reshape(target_dim(target), ncomp(chart_dim, degree))
        terms = {}
        cs = combos(chart_dim, degree)
        for k in range(comps.shape[0]):
            for I in range(comps.shape[1]):
                if comps[k, I] != 0.0:
                    terms[(k, cs[I])] = Poly.const(chart_dim, comps[k, I])
        return cls.from_poly(terms, degree, chart_dim, target)

    @classmethod
    def zero(cls, degree: int, chart_dim: int, target: Target) -> "FormField":
        return _poly_form({}, degree, chart_dim, target)

    @classmethod
    def exact(cls, fn: Callable[[Taylor], Taylor], degree: int, chart_dim: int, target: Target,
              depth: int = 0) -> "FormField":
        """Form from an evaluator returning Taylor components (..., w, N).

        The evaluator must use only arithmetic (no derivatives) unless
        ``depth`` records how many orders it consumes.
        """
        return cls(degree, chart_dim, target, EXACT, taylor_fn=fn, depth=depth)

    @classmethod
    def sampled_components(cls, fn: Callable[[np.ndarray], np.ndarray], degree: int, chart_dim: int,
                           target: Target, fd_level: int = 0) -> "FormField":
        return cls(degree, chart_dim, target, SAMPLED, numeric_fn=fn, fd_level=fd_level)

    @classmethod
    def sampled(cls, fn: Callable[..., np.ndarray], degree: int, chart_dim: int, target: Target) -> "FormField":
        """Black-box form from ``fn(points, v_1, .., v_p) -> (..., w)``."""
        cs = combos(chart_dim, degree)
        eye = np.eye(chart_dim)

        def numeric(points):
            cols = []
            for I in cs:
                vecs = [np.broadcast_to(eye[i], points.shape) for i in I]
                cols.append(np.asarray(fn(points, *vecs)))
            if not cols:
                return np.zeros(points.shape[:-1] + (target_dim(target), 0))
            return np.stack(cols, axis=-1)

        return cls(degree, chart_dim, target, SAMPLED, numeric_fn=numeric)

    # -- linear structure --
    def __add__(self, other: "FormField") -> "FormField":
        _same_shape(self, other)
        if self.backend == POLY and other.backend == POLY:
            store = dict(self.poly)
            for k, p in other.poly.items():
                store[k] = store[k] + p if k in store else p
            return _poly_form(store, self.degree, self.chart_dim, self.target)
        return combine([self, other], lambda a, b: a + b, self.degree, self.target)

    def __neg__(self) -> "FormField":
        return self * -1.0

    def __sub__(self, other: "FormField") -> "FormField":
        return self + (-other)

    def __mul__(self, s: float) -> "FormField":
        s = float(s)
        if self.backend == POLY:
            return _poly_form({k: p * s for k, p in self.poly.items()}, self.degree, self.chart_dim, self.target)
        return combine([self], lambda a: a * s, self.degree, self.target)

    __rmul__ = __mul__

    def linear(self, M, target: Target | None = None) -> "FormField":
        """Apply a constant linear map (w_out x w) to the values."""
        M = np.asarray(M, dtype=float)
        if M.ndim != 2 or M.shape[1] != self.dim:
            raise DimensionMismatch(f"linear map must have {self.dim} columns")
        tgt = M.shape[0] if target is None else target
        if target_dim(tgt) != M.shape[0]:
            raise TargetMismatch("target dimension does not match the map")
        if self.backend == POLY:
            store: dict[tuple[int, int], Poly] = {}
            for (k, I), p in self.poly.items():
                for r in np.nonzero(M[:, k])[0]:
                    key = (int(r), I)
                    q = p * M[r, k]
                    store[key] = store[key] + q if key in store else q
            return _poly_form(store, self.degree, self.chart_dim, tgt)
        return combine([self], lambda a: T.einsum("rk,...kN->...rN", M, a), self.degree, tgt)


def _replace(form: FormField, **kw) -> FormField:
    data = {f: getattr(form, f) for f in ("degree", "chart_dim", "target", "backend", "taylor_fn", "numeric_fn",
                                           "depth", "fd_level", "poly")}
    data.update(kw)
    return FormField(**data)


def _same_shape(a: FormField, b: FormField) -> None:
    if a.chart_dim != b.chart_dim:
        raise DimensionMismatch(f"forms live on charts of dimension {a.chart_dim} and {b.chart_dim}")
    if a.degree != b.degree:
        raise DimensionMismatch("forms have different degrees")
    if a.dim != b.dim:
        raise TargetMismatch("forms have different target dimensions")


def _poly_form(store: Mapping[tuple[int, int], Poly], degree: int, chart_dim: int, target: Target) -> FormField:
    store = dict(store)
    w = target_dim(target)
    N = ncomp(chart_dim, degree)
    keys = sorted(store)
    polys = [store[k] for k in keys]
    slots = np.array([k[0] * N + k[1] for k in keys], dtype=int)

    def fn(x):
        batch = x.shape[:-1]
        if not polys:
            return T.lift(np.zeros(batch + (w, N)), x)
        vals = evaluate_many(polys, x)  # (..., len(polys))
        scatter = np.zeros((len(polys), w * N))
        scatter[np.arange(len(polys)), slots] = 1.0
        return (vals @ scatter).reshape(batch + (w, N))

    return FormField(degree, chart_dim, target, POLY, taylor_fn=fn, depth=0, poly=store)


def combine(operands: Sequence[FormField], fn: Callable, degree: int, target: Target,
            extra_depth: int = 0) -> FormField:
    """Pointwise combination of component arrays; works for every backend."""
    n = operands[0].chart_dim
    for op in operands:
        if op.chart_dim != n:
            raise DimensionMismatch("operands live on different charts")
    if all(op.is_exact for op in operands):
        depth = max(op.depth for op in operands) + extra_depth
        return FormField(degree, n, target, EXACT,
                         taylor_fn=lambda x: fn(*[op.taylor(x) for op in operands]), depth=depth)
    b0 = basis(n, 0)

    def numeric(points):
        vals = [Taylor.constant(op.components(points), b0) for op in operands]
        return fn(*vals).value

    return FormField(degree, n, target, SAMPLED, numeric_fn=numeric,
                     fd_level=max(op.fd_level for op in operands))


def evaluate_at(form: FormField, y: Taylor) -> Taylor:
    """Components of ``form`` at a Taylor point y given in other variables.

    Arithmetic forms are evaluated directly.  Forms whose evaluator
    differentiates are expanded in their own chart variables first and the
    truncated series is composed with y.
    """
    if form.depth == 0:
        return form.taylor(y)
    y0 = y.value
    W = form.taylor(Taylor.variables(y0, y.order + form.depth))  # order y.order in own variables
    b = W.basis
    dy = y.nilpotent()
    monos = [tuple(e) for e in b.exponents]
    vals = monomial_values(monos, dy, form.chart_dim)  # (..., M)
    # W.c has shape (M, ..., w, N); contract monomial axis with vals
    Wc = np.moveaxis(W.c, 0, -1)  # (..., w, N, M)
    return T.einsum("...wNm,...m->...wN", Wc, vals)


# -- exterior calculus ---------------------------------------------------------------------

def exterior_derivative(form: FormField) -> FormField:
    n, p = form.chart_dim, form.degree
    w = form.dim
    if form.backend == POLY:
        store: dict[tuple[int, int], Poly] = {}
        src = combos(n, p)
        dst = combo_index(n, p + 1)
        for (k, I), poly in form.poly.items():
            Iset = src[I]
            for j in range(n):
                if j in Iset:
                    continue
                dp = poly.diff(j)
                if dp.is_zero():
                    continue
                J = tuple(sorted(Iset + (j,)))
                key = (k, dst[J])
                term = dp * float((-1) ** J.index(j))
                store[key] = store[key] + term if key in store else term
        return _poly_form(store, p + 1, n, form.target)
    D = _d_matrix(n, p)
    N = ncomp(n, p)
    if form.is_exact:
        def fn(x):
            G = form.taylor(x).grad()  # (..., w, N, n)
            G = G.reshape(G.shape[:-2] + (N * n,))
            return G @ D

        return FormField(p + 1, n, form.target, EXACT, taylor_fn=fn, depth=form.depth + 1)

    step = FD_STEP if form.fd_level == 0 else FD_STEP_NESTED

    def numeric(points):
        points = np.asarray(points, dtype=float)
        h = step * (1.0 + np.linalg.norm(points, axis=-1))
        cols = []
        for j in range(n):
            e = np.zeros(n)
            e[j] = 1.0
            off = h[..., None] * e
            diff = form.components(points + off) - form.components(points - off)
            cols.append(diff / (2.0 * h[..., None, None]))
        G = np.stack(cols, axis=-1).reshape(points.shape[:-1] + (w, N * n))
        return G @ D

    return FormField(p + 1, n, form.target, SAMPLED, numeric_fn=numeric, fd_level=form.fd_level + 1)


def wedge(phi: FormField, psi: FormField, bilinear: np.ndarray, target: Target | None = None) -> FormField:
    """Wedge product through a bilinear map B[k, a, b] on the values."""
    B = np.asarray(bilinear, dtype=float)
    if B.shape[1:] != (phi.dim, psi.dim):
        raise DimensionMismatch(f"bilinear map shape {B.shape} does not fit values {phi.dim}, {psi.dim}")
    if phi.chart_dim != psi.chart_dim:
        raise DimensionMismatch("forms live on different charts")
    n, p, q = phi.chart_dim, phi.degree, psi.degree
    tgt = B.shape[0] if target is None else target
    Ii, Ki, S = _wedge_table(n, p, q)
    if phi.backend == POLY and psi.backend == POLY:
        store: dict[tuple[int, int], Poly] = {}
        by_pair = {}
        for l in range(len(Ii)):
            by_pair.setdefault((Ii[l], Ki[l]), []).append(l)
        for (a, I), pa in phi.poly.items():
            for (b, K), pb in psi.poly.items():
                ls = by_pair.get((I, K))
                if not ls:
                    continue
                ks = np.nonzero(B[:, a, b])[0]
                if ks.size == 0:
                    continue
                prod = pa * pb
                for l in ls:
                    J = int(np.nonzero(S[l])[0][0])
                    for k in ks:
                        key = (int(k), J)
                        term = prod * float(S[l, J] * B[k, a, b])
                        store[key] = store[key] + term if key in store else term
        return _poly_form(store, p + q, n, tgt)
    w = target_dim(tgt)

    def fn(a, b):
        if len(Ii) == 0:
            return T.lift(np.zeros(T.value(a).shape[:-2] + (w, ncomp(n, p + q))), a)
        prod = T.einsum("kab,...aL,...bL->...kL", B, a[..., Ii], b[..., Ki])
        return prod @ S

    return combine([phi, psi], fn, p + q, tgt)


def wedge_bracket(phi: FormField, psi: FormField) -> FormField:
    alg = phi.algebra
    if alg is None or psi.algebra is None or alg.dim != psi.algebra.dim or \
            not np.array_equal(alg.structure, psi.algebra.structure):
        raise TargetMismatch("wedge_bracket needs two forms into the same Lie algebra")
    return wedge(phi, psi, alg.structure, target=alg)


def rho_wedge(kappa: FormField, psi: FormField, rep: MatrixRep) -> FormField:
    """(rho(kappa) ^ Psi)(xi_0..xi_p) = sum_i (-1)^i rho(kappa(xi_i)) Psi(..^i..)."""
    if kappa.degree != 1:
        raise DimensionMismatch("rho_wedge takes a 1-form as first argument")
    if kappa.dim != rep.algebra.dim or psi.dim != rep.rep_dim:
        raise DimensionMismatch("representation does not match the form targets")
    B = np.transpose(rep.generators, (1, 0, 2))  # B[w, i, v] = rho(e_i)[w, v]
    return wedge(kappa, psi, B, target=psi.target)


def apply_multilinear(f: MultilinearFunction, *forms: FormField) -> FormField:
    """Scalar form f(psi_1 ^ .. ^ psi_k) with the shuffle normalization."""
    k = f.arity
    if len(forms) != k:
        raise DimensionMismatch(f"{k}-linear function applied to {len(forms)} forms")
    w = f.dim
    for fm in forms:
        if fm.dim != w:
            raise DimensionMismatch("form targets do not match the multilinear function")
    rest = w ** (k - 1)
    first = forms[0].linear(np.moveaxis(f.coeffs, 0, -1).reshape(rest, w))
    acc = first
    for j in range(1, k):
        rest_out = w ** (k - 1 - j)
        # contract the slowest remaining index of acc with the values of forms[j]
        B = np.zeros((rest_out, w * rest_out, w))
        for b in range(w):
            for r in range(rest_out):
                B[r, b * rest_out + r, b] = 1.0
        acc = wedge(acc, forms[j], B)
    return acc


@dataclass(frozen=True, eq=False)
class ChartMap:
    """Smooth map between charts; ``fn`` must accept Taylor input unless sampled."""

    dim_in: int
    dim_out: int
    fn: Callable
    exact: bool = True
    jacobian: Callable | None = None

    def __call__(self, x):
        return self.fn(x)

    def jac(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.exact:
            return self.fn(Taylor.variables(x, 1)).grad().value
        if self.jacobian is not None:
            return np.asarray(self.jacobian(x))
        h = FD_STEP * (1.0 + np.linalg.norm(x, axis=-1))
        cols = []
        for j in range(self.dim_in):
            e = np.zeros(self.dim_in)
            e[j] = 1.0
            off = h[..., None] * e
            cols.append((np.asarray(self.fn(x + off)) - np.asarray(self.fn(x - off))) / (2 * h[..., None]))
        return np.stack(cols, axis=-1)

    @classmethod
    def linear(cls, A) -> "ChartMap":
        A = np.asarray(A, dtype=float)
        return cls(A.shape[1], A.shape[0], lambda x: x @ A.T)

    @classmethod
    def identity(cls, n: int) -> "ChartMap":
        return cls(n, n, lambda x: x)

    def then(self, other: "ChartMap") -> "ChartMap":
        """other after self."""
        return ChartMap(self.dim_in, other.dim_out, lambda x: other.fn(self.fn(x)),
                        self.exact and other.exact)


def pullback(fmap: ChartMap, form: FormField) -> FormField:
    if fmap.dim_out != form.chart_dim:
        raise DimensionMismatch(f"map lands in dimension {fmap.dim_out}, form lives on {form.chart_dim}")
    p = form.degree
    n_new = fmap.dim_in
    if fmap.exact and form.is_exact:
        def fn(x):
            y = fmap.fn(x)
            comps = evaluate_at(form, y)
            if p == 0:
                return comps
            L = minors(y.grad(), p)  # (..., C(n_old,p), C(n_new,p))
            return T.einsum("...wI,...IK->...wK", comps, L)

        return FormField(p, n_new, form.target, EXACT, taylor_fn=fn, depth=max(form.depth, 1 if p else 0))

    def numeric(points):
        points = np.asarray(points, dtype=float)
        y = np.asarray(fmap.fn(points)) if not fmap.exact else fmap.fn(Taylor.variables(points, 0)).value
        comps = form.components(y)
        if p == 0:
            return comps
        L = minors(fmap.jac(points), p)
        return np.einsum("...wI,...IK->...wK", comps, L)

    return FormField(p, n_new, form.target, SAMPLED, numeric_fn=numeric,
                     fd_level=form.fd_level + (0 if fmap.exact else 1))


def mc_expression(kappa: FormField, sign: float = 1.0) -> FormField:
    """d kappa + sign * 1/2 [kappa, kappa]."""
    return exterior_derivative(kappa) + wedge_bracket(kappa, kappa) * (0.5 * sign)


def function_form(fn: Callable, chart_dim: int, target: Target, depth: int = 0) -> FormField:
    """0-form from an evaluator x -> (..., w) that accepts Taylor input."""
    return FormField.exact(lambda x: fn(x)[..., None], 0, chart_dim, target, depth)


def matrix_times(M: FormField, form: FormField, d: int) -> FormField:
    """Pointwise product of a 0-form with values in d x d matrices (row-major) and a form into R^d."""
    if M.degree != 0 or M.dim != d * d or form.dim != d:
        raise DimensionMismatch("matrix_times needs a d*d-valued function and an R^d-valued form")
    B = np.zeros((d, d * d, d))
    for a in range(d):
        for b in range(d):
            B[a, a * d + b, b] = 1.0
    return wedge(M, form, B, target=form.target)


def residual(expr: FormField, points, scale_forms: Sequence[FormField] = ()) -> float:
    """max |expr| over points, divided by max(1, max |scale forms|)."""
    val = float(np.abs(expr.components(points)).max(initial=0.0))
    scale = 1.0
    for s in scale_forms:
        scale = max(scale, float(np.abs(s.components(points)).max(initial=0.0)))
    return val / scale
