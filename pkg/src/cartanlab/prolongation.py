"""Spencer calculus for linear Lie algebras g ⊂ gl(V) and canonical connections of G-structures.

Tensor conventions: an element of V⊗(V*)^q is a full array ``T[a, i1, ..., iq]``
with ``T(v1, .., vq)^a = T[a, i1..iq] v1^i1 ... vq^iq``.  g^(0) = g ⊂ V⊗V* is
stored as matrices ``M[a, i]`` and g^(k) ⊂ V⊗S^{k+1}V* as symmetric arrays.
A map H: V → g is stored as algebra coordinates of shape (dim g, n), column i
being H(e_i).  The Spencer operator on g⊗V* is (δH)(v, w) = H(w)v − H(v)w.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import taylor as T
from .cartan import CartanConnection, GeneralizedCartanConnection, LocalModel, make_principal_cartan
from .errors import (DimensionMismatch, InvalidAlgebra, NoSolution, NotGInvariant, NotType1, NotType2,
                     SingularFrame, UnsupportedCurvedBase)
from .forms import FormField, combos, evaluate_at, exterior_derivative, full_tensor, sample_points
from .lie_core import CLOSURE_TOL, LieAlgebra, MatrixRep, algebra_from_matrices, preset, semidirect
from .matrix_group import GroupChart, expm
from .poly import PolyMatrix
from .taylor import Taylor

TYPE1, TYPE2 = "TYPE1", "TYPE2"

RANK_RTOL = 1e-9
RANK_ATOL = 1e-12  # constraint matrices have O(1) entries; below this a singular value is rounding noise
INVARIANCE_TOL = 1e-6
K_MAX = 4
FRAME_COND_LIMIT = 1e12

GROUP_ALIASES = {"o2": "so2", "o3": "so3"}


def higher_verdict(k_max: int) -> str:
    return f"HIGHER_OR_INFINITE({k_max})"


# -- linear algebra helpers -------------------------------------------------------------

def _svd_rank(s: np.ndarray, rtol: float) -> int:
    if s.size == 0:
        return 0
    return int((s > max(rtol * s[0], RANK_ATOL)).sum())


def nullspace(A, rtol: float = RANK_RTOL) -> tuple[np.ndarray, float]:
    """Orthonormal kernel basis (columns) and the singular-value gap ratio at the rank cut."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    ncols = A.shape[1]
    if A.size == 0:
        return np.eye(ncols), math.inf
    _, s, vt = np.linalg.svd(A)
    r = _svd_rank(s, rtol)
    gap = s[r - 1] / s[r] if 0 < r < s.size and s[r] > 0 else math.inf
    return vt[r:].T.copy(), float(gap)


def column_space(A, rtol: float = RANK_RTOL) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0:
        return np.zeros((A.shape[0], 0))
    u, s, _ = np.linalg.svd(A, full_matrices=False)
    return u[:, : _svd_rank(s, rtol)].copy()


def rank(A, rtol: float = RANK_RTOL) -> int:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0:
        return 0
    return _svd_rank(np.linalg.svd(A, compute_uv=False), rtol)


def span_distance(A, B) -> float:
    """Distance between the row spans of A and B (inf if the dimensions differ)."""
    QA, QB = column_space(np.asarray(A).T), column_space(np.asarray(B).T)
    if QA.shape[1] != QB.shape[1]:
        return math.inf
    if QA.shape[1] == 0:
        return 0.0
    return float(max(np.abs(QA - QB @ (QB.T @ QA)).max(), np.abs(QB - QA @ (QA.T @ QB)).max()))


# -- tensor helpers ---------------------------------------------------------------------

def sym_basis(n: int, p: int) -> np.ndarray:
    """Basis of V⊗S^pV* as flattened full tensors, shape (n·C(n+p−1, p), n^(p+1))."""
    rows = []
    for a in range(n):
        for I in itertools.combinations_with_replacement(range(n), p):
            t = np.zeros((n,) * (p + 1))
            for perm in set(itertools.permutations(I)):
                t[(a,) + perm] = 1.0
            rows.append(t.ravel())
    return np.array(rows).reshape(len(rows), n ** (p + 1))


def alt_compress(t, q: int):
    """Components of an array alternating in its last q axes, over increasing index tuples."""
    n = T.value(t).shape[-1]
    idx = np.array(combos(n, q), dtype=int).reshape(-1, q)
    return t[(Ellipsis,) + tuple(idx[:, j] for j in range(q))]


def alt_expand(c, n: int, q: int) -> np.ndarray:
    return full_tensor(c, n, q)


def _scatter2(n: int) -> np.ndarray:
    """E[Q, i, j] with full[..., i, j] = sum_Q comps[..., Q] E[Q, i, j]."""
    return full_tensor(np.eye(math.comb(n, 2)), n, 2)


def spencer_delta(t, sym: int = 1) -> np.ndarray:
    """Spencer alternation V⊗S^pV*⊗Λ^qV* → V⊗S^{p−1}V*⊗Λ^{q+1}V* on full arrays.

    Axis 0 is the V slot, the next ``sym`` axes are the symmetric slots and the
    rest are alternating.  (δT)(w; v0..vq) = Σ_i (−1)^i T(v_i, w; v0..v̂_i..vq).
    """
    t = np.asarray(t, dtype=float)
    n = t.shape[0]
    q = t.ndim - 1 - sym
    if sym < 1 or q < 0 or any(s != n for s in t.shape):
        raise DimensionMismatch(f"tensor of shape {t.shape} does not fit V⊗S^{sym}V*⊗Λ^qV*")
    y = np.moveaxis(t, 1, -1)  # (a, w.., t1..tq, s1)
    out = np.zeros((n,) * (t.ndim))
    for i in range(q + 1):
        out += (-1) ** i * np.moveaxis(y, -1, sym + i)
    return out


def act_on_tensor(a: np.ndarray, t: np.ndarray) -> np.ndarray:
    """(a·T)(v1..vq) = a T(a⁻¹v1, .., a⁻¹vq)."""
    ainv = np.linalg.inv(a)
    out = np.tensordot(a, t, axes=(1, 0))
    for ax in range(1, t.ndim):
        out = np.moveaxis(np.tensordot(out, ainv, axes=(ax, 0)), -1, ax)
    return out


# -- linear Lie algebras ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LinearLieAlgebra:
    """g ⊂ gl(V) spanned by matrices of shape (dim g, n, n)."""

    basis: np.ndarray
    name: str = ""
    relation: str | None = None
    names: tuple[str, ...] = ()

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float)
        if b.ndim != 3 or b.shape[1] != b.shape[2]:
            raise DimensionMismatch(f"basis must have shape (dim, n, n), got {b.shape}")
        b = b.copy()
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)
        if b.shape[0] and rank(b.reshape(b.shape[0], -1), 1e-10) < b.shape[0]:
            raise InvalidAlgebra("basis matrices are linearly dependent")
        res = self.closure_residual()
        if res > CLOSURE_TOL:
            raise InvalidAlgebra(f"span is not closed under commutators (residual {res:.3e})")

    @property
    def n(self) -> int:
        return self.basis.shape[1]

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @cached_property
    def span(self) -> np.ndarray:
        """Orthonormal basis of g inside gl(V) ≅ R^{n²}, as columns."""
        return column_space(self.basis.reshape(self.dim, -1).T)

    @cached_property
    def perp_projector(self) -> np.ndarray:
        Q = self.span
        return np.eye(self.n * self.n) - Q @ Q.T

    def closure_residual(self) -> float:
        b = self.basis
        if not b.shape[0]:
            return 0.0
        comm = np.einsum("iac,jcb->ijab", b, b)
        comm = (comm - comm.transpose(1, 0, 2, 3)).reshape(-1, self.n * self.n)
        scale = max(1.0, float(np.abs(b).max()) ** 2)
        return float(np.abs(comm @ self.perp_projector).max(initial=0.0)) / scale

    def coords(self, M) -> np.ndarray:
        """Coordinates of matrices (..., n, n) in the basis, by least squares."""
        M = np.asarray(M, dtype=float)
        G = self.basis.reshape(self.dim, -1)
        flat = M.reshape(-1, self.n * self.n)
        c = np.linalg.lstsq(G.T, flat.T, rcond=None)[0].T
        return c.reshape(M.shape[:-2] + (self.dim,))

    @cached_property
    def algebra_rep(self) -> tuple[LieAlgebra, MatrixRep]:
        if not self.dim:
            alg = LieAlgebra(0, np.zeros((0, 0, 0)), (), self.name)
            return alg, MatrixRep(alg, np.zeros((0, self.n, self.n)), self.relation)
        return algebra_from_matrices(self.basis, self.names, self.name, self.relation)

    @property
    def algebra(self) -> LieAlgebra:
        return self.algebra_rep[0]

    @property
    def rep(self) -> MatrixRep:
        return self.algebra_rep[1]

    def sample_elements(self, count: int, seed: int, scale: float = 0.5) -> np.ndarray:
        """Group elements exp(Σ y_i X_i) with uniform y."""
        rng = np.random.default_rng(seed)
        Y = rng.uniform(-scale, scale, size=(count, self.dim))
        return expm(np.einsum("ci,iab->cab", Y, self.basis))

    @classmethod
    def from_preset(cls, name: str) -> "LinearLieAlgebra":
        key = GROUP_ALIASES.get(name, name)
        alg, rep = preset(key)
        return cls(rep.generators, name, rep.relation, alg.basis_names)

    @classmethod
    def zero(cls, n: int) -> "LinearLieAlgebra":
        return cls(np.zeros((0, n, n)), "zero")

    def to_literal(self) -> dict:
        return {"matrices": self.basis.tolist()}


# -- prolongations ------------------------------------------------------------------------

def _prolong_constraints(perp: np.ndarray, n: int, p: int, extra: int) -> tuple[np.ndarray, float]:
    """Symmetric T ∈ V⊗S^{p+extra}V* whose partial evaluations in the last ``extra`` slots lie
    in the subspace A ⊂ V⊗S^pV* whose orthogonal projector (on flattened arrays) is ``perp``."""
    S = sym_basis(n, p + extra)
    St = S.reshape(S.shape[0], n ** (p + 1), n ** extra)
    C = np.einsum("qr,srf->fqs", perp, St).reshape(-1, S.shape[0])
    N, gap = nullspace(C)
    full = (S.T @ N).T
    Q = column_space(full.T)
    return Q.T.copy(), gap


def prolong_subspace(A_basis: np.ndarray, n: int, p: int) -> tuple[np.ndarray, float]:
    """First prolongation A^(1) ⊂ V⊗S^{p+1}V* of A ⊂ V⊗S^pV* (rows are flattened arrays)."""
    A_basis = np.asarray(A_basis, dtype=float).reshape(-1, n ** (p + 1))
    Q = column_space(A_basis.T)
    perp = np.eye(n ** (p + 1)) - Q @ Q.T
    return _prolong_constraints(perp, n, p, 1)


@dataclass(frozen=True, eq=False)
class ProlongationTable:
    """Bases of g^(k) for k = 0..k_max as flattened arrays in V⊗S^{k+1}V*."""

    n: int
    bases: tuple[np.ndarray, ...]
    gaps: tuple[float, ...]

    @property
    def k_max(self) -> int:
        return len(self.bases) - 1

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(b.shape[0] for b in self.bases)

    def dim(self, k: int) -> int:
        return self.dims[k]

    def basis(self, k: int) -> np.ndarray:
        """g^(k) basis as arrays of shape (dim, n, n, ..., n) with k+2 tensor axes."""
        return self.bases[k].reshape((-1,) + (self.n,) * (k + 2))

    @property
    def verdict(self) -> str:
        d = self.dims
        if d[1] == 0:
            return TYPE1
        if self.k_max >= 2 and d[2] == 0:
            return TYPE2
        return higher_verdict(self.k_max)

    def symmetry_residual(self) -> float:
        worst = 0.0
        for k in range(1, self.k_max + 1):
            B = self.basis(k)
            for perm in itertools.permutations(range(1, k + 2)):
                moved = np.transpose(B, (0, 1) + tuple(q + 1 for q in perm))
                worst = max(worst, float(np.abs(B - moved).max(initial=0.0)))
        return worst

    def membership_residual(self, g: LinearLieAlgebra) -> float:
        worst = 0.0
        n = self.n
        for k in range(1, self.k_max + 1):
            B = self.bases[k].reshape(-1, n * n, n ** k)
            worst = max(worst, float(np.abs(np.einsum("qr,drf->dqf", g.perp_projector, B)).max(initial=0.0)))
        return worst

    def to_dict(self) -> dict:
        return {"dims": list(self.dims), "verdict": self.verdict,
                "gap_ratios": [None if math.isinf(g) else float(f"{g:.6e}") for g in self.gaps]}


def prolong(g: LinearLieAlgebra, k_max: int = 2) -> ProlongationTable:
    """g^(k) for k ≤ k_max as the nullspace of the membership constraints on symmetric tensors."""
    if not 1 <= k_max <= K_MAX:
        raise ValueError(f"k_max must lie in 1..{K_MAX}")
    n = g.n
    bases = [column_space(g.basis.reshape(g.dim, -1).T).T.copy()]
    gaps = [math.inf]
    for k in range(1, k_max + 1):
        if bases[-1].shape[0] == 0:
            bases.append(np.zeros((0, n ** (k + 2))))
            gaps.append(math.inf)
            continue
        B, gap = _prolong_constraints(g.perp_projector, n, 1, k)
        bases.append(B)
        gaps.append(gap)
    return ProlongationTable(n, tuple(bases), tuple(gaps))


def iterated_prolongation_distance(table: ProlongationTable, k: int) -> float:
    """Span distance between g^(k+1) and (g^(k))^(1)."""
    if k + 1 > table.k_max:
        raise ValueError("table does not reach k+1")
    again, _ = prolong_subspace(table.bases[k], table.n, k + 1)
    return span_distance(again, table.bases[k + 1]) if again.shape[0] or table.dim(k + 1) else 0.0


def hom_basis_from_prolongation(g: LinearLieAlgebra, table: ProlongationTable) -> np.ndarray:
    """g^(1) basis as maps V → g in coordinates, shape (dim g^(1), dim g, n)."""
    B = table.basis(1)  # (d1, n, n, n)
    return np.stack([g.coords(np.moveaxis(b, -1, 0)).T for b in B]) if len(B) else np.zeros((0, g.dim, g.n))


# -- torsion complement ------------------------------------------------------------------

def delta_on_hom(g: LinearLieAlgebra) -> np.ndarray:
    """Matrix of H ↦ δH from (dim g, n) coordinates to compressed V⊗Λ²V*."""
    n, k = g.n, g.dim
    cols = []
    for r in range(k):
        for i in range(n):
            t = np.zeros((n, n, n))
            t[:, :, i] = g.basis[r]
            cols.append(alt_compress(spencer_delta(t), 2).ravel())
    return np.array(cols).T.reshape(n * math.comb(n, 2), k * n)


@dataclass(frozen=True, eq=False)
class TorsionComplement:
    """V⊗Λ²V* = δ(g⊗V*) ⊕ 𝔡 in compressed coordinates, with 𝔡 the orthogonal complement."""

    n: int
    image: np.ndarray
    complement: np.ndarray
    delta_matrix: np.ndarray
    leakage: float
    intersection_dim: int

    @property
    def dim(self) -> int:
        return self.complement.shape[1]

    @property
    def image_projector(self) -> np.ndarray:
        return self.image @ self.image.T

    def to_dict(self) -> dict:
        return {"dim_image": int(self.image.shape[1]), "dim_complement": self.dim,
                "leakage": float(f"{self.leakage:.6e}"), "intersection_dim": self.intersection_dim}


def _leakage(Q_img: np.ndarray, Q_comp: np.ndarray, n: int, elements) -> float:
    if Q_comp.shape[1] == 0:
        return 0.0
    worst = 0.0
    P = Q_img @ Q_img.T
    for a in elements:
        for col in Q_comp.T:
            moved = alt_compress(act_on_tensor(a, alt_expand(col.reshape(n, -1), n, 2)), 2).ravel()
            worst = max(worst, float(np.abs(P @ moved).max()))
    return worst


def torsion_complement(g: LinearLieAlgebra, strict: bool = False, samples: int = 8, seed: int = 0x5EED,
                       elements=None) -> TorsionComplement:
    """Orthogonal complement of δ(g⊗V*) with a sampled G-invariance check.

    ``elements`` overrides the sampled group elements used for the leakage measurement.
    """
    n = g.n
    D = delta_on_hom(g) if g.dim else np.zeros((n * math.comb(n, 2), 0))
    Q_img = column_space(D)
    Q_comp = _complement(Q_img, np.eye(D.shape[0]))
    inter = Q_img.shape[1] + Q_comp.shape[1] - rank(np.hstack([Q_img, Q_comp]))
    if elements is None:
        elements = g.sample_elements(samples, seed) if g.dim else []
    leak = _leakage(Q_img, Q_comp, n, elements)
    if leak > INVARIANCE_TOL:
        msg = f"complement is not G-invariant (leakage {leak:.3e})"
        if strict:
            raise NotGInvariant(msg)
        warnings.warn(msg, stacklevel=2)
    return TorsionComplement(n, Q_img, Q_comp, D, leak, int(inter))


# -- Spencer splittings ------------------------------------------------------------------

@dataclass(frozen=True)
class SplittingReport:
    dim_g_lambda2: int
    dim_R: int
    dim_d1: int
    dim_delta_g1: int
    dim_d2: int
    dim_g_V: int
    dim_g1: int
    dim_d3: int
    rank_R_d1: int
    rank_img_d2: int
    rank_g1_d3: int

    def consistent(self) -> bool:
        return (self.dim_g_lambda2 == self.dim_R + self.dim_d1 == self.rank_R_d1
                and self.dim_R == self.dim_delta_g1 + self.dim_d2 == self.rank_img_d2
                and self.dim_g_V == self.dim_g1 + self.dim_d3 == self.rank_g1_d3)

    def to_dict(self) -> dict:
        return {k: int(v) for k, v in self.__dict__.items()}


def _complement(Q: np.ndarray, ambient: np.ndarray) -> np.ndarray:
    """Orthonormal complement of span(Q) inside span(ambient) (both column bases)."""
    N, _ = nullspace(Q.T @ ambient)
    return ambient @ N


def g_lambda2_basis(g: LinearLieAlgebra) -> np.ndarray:
    """Basis of g⊗Λ²V* as arrays (k·C(n,2), n, n, n, n): T[a, w, i, j] = B_r[a, w] e^i∧e^j."""
    n = g.n
    out = []
    for r in range(g.dim):
        for i, j in combos(n, 2):
            t = np.zeros((n,) * 4)
            t[:, :, i, j] = g.basis[r]
            t[:, :, j, i] = -g.basis[r]
            out.append(t)
    return np.array(out).reshape(-1, n, n, n, n)


def spencer_splitting(g: LinearLieAlgebra, table: ProlongationTable | None = None) -> SplittingReport:
    """Dimensions of R(g), δ(g^(1)⊗V*) and the complements 𝔡1, 𝔡2, 𝔡3, from assembled matrices."""
    table = table or prolong(g, 1)
    n = g.n
    G2 = g_lambda2_basis(g)
    flat = G2.reshape(len(G2), -1).T  # columns in the full array space
    dG2 = np.array([spencer_delta(t).ravel() for t in G2]).T if len(G2) else np.zeros((n ** 4, 0))
    kerR, _ = nullspace(dG2)  # coefficients
    R = column_space(flat @ kerR)
    amb = column_space(flat)
    d1 = _complement(R, amb)
    images = []
    for B in table.basis(1):
        for m in range(n):
            u = np.zeros((n,) * 4)
            u[..., m] = B
            images.append(spencer_delta(u, sym=2).ravel())
    img = column_space(np.array(images).T) if images else np.zeros((n ** 4, 0))
    d2 = _complement(img, R)
    # g⊗V* and g^(1) inside it, as maps V → g flattened
    gV = np.array([np.einsum("ab,i->abi", Bm, e).ravel() for Bm in g.basis for e in np.eye(n)]).T
    gV = column_space(gV) if gV.size else np.zeros((n ** 3, 0))
    g1 = column_space(table.bases[1].T) if table.dim(1) else np.zeros((n ** 3, 0))
    d3 = _complement(g1, gV)
    return SplittingReport(
        amb.shape[1], R.shape[1], d1.shape[1], img.shape[1], d2.shape[1], gV.shape[1], g1.shape[1], d3.shape[1],
        rank(np.hstack([R, d1])), rank(np.hstack([img, d2])), rank(np.hstack([g1, d3])))


# -- local G-structures --------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LocalGStructure:
    """U × G with displacement form θ_(x,a)(ξ, ζ) = a⁻¹ S(x)⁻¹ ξ; S is None for the flat structure."""

    group: LinearLieAlgebra
    frame: PolyMatrix | None = None
    base_box: tuple[np.ndarray, np.ndarray] | None = None
    radius: float = 0.5

    def __post_init__(self):
        n = self.group.n
        if self.group.dim == 0:
            raise DimensionMismatch("the structure group must have positive dimension")
        if self.frame is not None and (self.frame.shape != (n, n) or self.frame.nvars != n):
            raise DimensionMismatch(f"frame must be an {n}x{n} polynomial matrix in {n} variables")
        if self.base_box is None:
            box = (-0.5 * np.ones(n), 0.5 * np.ones(n))
        else:
            box = tuple(np.asarray(b, dtype=float).reshape(n) for b in self.base_box)
        object.__setattr__(self, "base_box", box)

    @classmethod
    def flat(cls, group: LinearLieAlgebra, base_box=None) -> "LocalGStructure":
        return cls(group, None, base_box)

    @property
    def n(self) -> int:
        return self.group.n

    @property
    def is_flat(self) -> bool:
        return self.frame is None

    @cached_property
    def chart(self) -> GroupChart:
        alg, rep = self.group.algebra_rep
        return GroupChart(alg, rep, radius=self.radius)

    @cached_property
    def h(self) -> LieAlgebra:
        """g ⋉ V with basis (g..., V...)."""
        return semidirect(self.group.rep, name=f"{self.group.name}xV")

    def S(self, x):
        if self.frame is not None:
            return self.frame(x)
        eye = np.broadcast_to(np.eye(self.n), T.value(x).shape[:-1] + (self.n, self.n))
        return T.lift(eye, x) if isinstance(x, Taylor) else eye

    def S_inv(self, x):
        if self.frame is None:
            return self.S(x)
        return T.inv(self.frame(x))

    def check_frame(self, points) -> float:
        S = np.asarray(T.value(self.S(np.asarray(points, dtype=float))))
        cond = np.linalg.cond(S)
        worst = float(np.max(cond, initial=0.0))
        if not np.all(np.isfinite(cond)) or worst > FRAME_COND_LIMIT:
            raise SingularFrame(f"frame condition number {worst:.3e} exceeds {FRAME_COND_LIMIT:.0e}")
        return worst

    def sample_base(self, count: int = 16, seed: int = 0x5EED) -> np.ndarray:
        return sample_points(*self.base_box, count, seed)

    @cached_property
    def displacement_form(self) -> FormField:
        """θ on the chart (x, s) of U × G."""
        n, k = self.n, self.group.dim
        chart, gens = self.chart, self.group.basis

        def fn(z):
            x, s = z[..., :n], z[..., n:]
            horiz = chart.rep_of(s, gens, inverse=True) @ self.S_inv(x)
            zero = T.lift(np.zeros(T.value(z).shape[:-1] + (n, k)), z)
            return T.concatenate([horiz, zero], axis=-1)

        return FormField.exact(fn, 1, n + k, n)

    @cached_property
    def base_coframe(self) -> FormField:
        """S⁻¹dx on U."""
        return FormField.exact(lambda x: self.S_inv(x), 1, self.n, self.n)

    @cached_property
    def _d_base_coframe(self) -> FormField:
        return exterior_derivative(self.base_coframe)

    def coordinate_torsion(self, x):
        """t(0)(v, w) = d(S⁻¹dx)(Sv, Sw); Taylor-capable in x."""
        n = self.n
        if self.frame is None:
            zero = np.zeros(T.value(x).shape[:-1] + (n, n, n))
            return T.lift(zero, x) if isinstance(x, Taylor) else zero
        if isinstance(x, Taylor):
            comps = evaluate_at(self._d_base_coframe, x)
        else:
            comps = self._d_base_coframe.components(x)
        F = T.einsum("...aQ,Qij->...aij", comps, _scatter2(n))
        S = self.S(x)
        tmp = T.einsum("...akl,...ki->...ail", F, S)
        return T.einsum("...ail,...lj->...aij", tmp, S)


def torsion_function(struct: LocalGStructure, x, H=None) -> np.ndarray:
    """t(H)(v, w) = dθ(h(v), h(w)) at (x, e), h(v) = (S(x)v, ζ_{H(v)}); full array (..., n, n, n)."""
    x = np.asarray(x, dtype=float)
    n, k = struct.n, struct.group.dim
    struct.check_frame(x)
    batch = x.shape[:-1]
    H = np.zeros(batch + (k, n)) if H is None else np.broadcast_to(np.asarray(H, dtype=float), batch + (k, n))
    p = np.concatenate([x, np.zeros(batch + (k,))], axis=-1)
    dtheta = exterior_derivative(struct.displacement_form)
    F = full_tensor(dtheta.components(p), n + k, 2)  # (..., n, N, N)
    M0 = struct.chart.left_mc(np.zeros(k))
    L = np.concatenate([np.asarray(T.value(struct.S(x))), np.linalg.solve(M0, H)], axis=-2)  # (..., N, n)
    return np.einsum("...aIJ,...Ii,...Jj->...aij", F, L, L)


# -- first prolongation -----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FirstProlongation:
    """P¹ over U × G in the chart (x, c, s); c are coordinates of the affine coset of g^(1).

    ``theta1`` is θ¹ = ω + θ∘Tp¹ with values in g ⋉ V (basis g..., V...).
    """

    structure: LocalGStructure
    table: ProlongationTable
    complement: TorsionComplement
    coset_basis: np.ndarray
    model: LocalModel
    theta1: GeneralizedCartanConnection
    solver: np.ndarray

    @property
    def d1(self) -> int:
        return self.coset_basis.shape[0]

    def particular(self, x):
        """Normalized H₀(x) with t(H₀) ∈ 𝔡 and H₀ orthogonal to g^(1); Taylor-capable."""
        st = self.structure
        t0 = st.coordinate_torsion(x)
        tc = alt_compress(t0, 2)
        batch = T.value(tc).shape[:-2]
        flat = tc.reshape(batch + (-1,))
        H = T.einsum("ij,...j->...i", self.solver, flat)
        return H.reshape(batch + (st.group.dim, st.n))

    @property
    def omega(self) -> FormField:
        k = self.structure.group.dim
        return self.theta1.kappa.linear(np.eye(self.theta1.h.dim)[:k], self.structure.group.algebra)

    def base_points(self, count: int = 16, seed: int = 0x5EED) -> np.ndarray:
        return self.structure.sample_base(count, seed)

    def solve_residual(self, xs) -> float:
        """max |projection of t(H₀(x)) onto δ(g⊗V*)|, with t evaluated from dθ on U × G."""
        xs = np.asarray(xs, dtype=float)
        H0 = np.asarray(T.value(self.particular(xs)))
        t = torsion_function(self.structure, xs, H0)
        proj = alt_compress(t, 2).reshape(t.shape[:-3] + (-1,)) @ self.complement.image_projector
        scale = max(1.0, float(np.abs(t).max(initial=0.0)))
        return float(np.abs(proj).max(initial=0.0)) / scale

    def coset_dims(self, xs, rtol: float = RANK_RTOL) -> list[int]:
        """Dimension of the solution set of t(H) ∈ 𝔡 at each base point, from the torsion map itself."""
        st = self.structure
        k, n = st.group.dim, st.n
        P = self.complement.image_projector
        dims = []
        for x in np.atleast_2d(np.asarray(xs, dtype=float)):
            t0 = alt_compress(torsion_function(st, x), 2).ravel()
            cols = []
            for j in range(k * n):
                E = np.zeros(k * n)
                E[j] = 1.0
                cols.append(P @ (alt_compress(torsion_function(st, x, E.reshape(k, n)), 2).ravel() - t0))
            dims.append(int(nullspace(np.array(cols).T, rtol)[0].shape[1]))
        return dims

    def shift_law_residual(self, xs, count: int = 4, seed: int = 0) -> float:
        """max |t(H + ℓ) − t(H) − δℓ| over random H, ℓ: V → g."""
        st = self.structure
        k, n = st.group.dim, st.n
        rng = np.random.default_rng(seed)
        worst, scale = 0.0, 1.0
        for x in np.atleast_2d(np.asarray(xs, dtype=float)):
            for _ in range(count):
                H, ell = rng.normal(size=(k, n)), rng.normal(size=(k, n))
                diff = torsion_function(st, x, H + ell) - torsion_function(st, x, H)
                expected = alt_expand((self.complement.delta_matrix @ ell.ravel()).reshape(n, -1), n, 2)
                worst = max(worst, float(np.abs(diff - expected).max()))
                scale = max(scale, float(np.abs(expected).max()))
        return worst / scale

    def g_equivariance_residual(self, points, elements) -> float:
        from .cartan import equivariance_residual
        return equivariance_residual(self.theta1, points, elements)

    def g1_equivariance_residual(self, points, shifts) -> float:
        """θ¹(x, c + Δ, s) = (ω − ℓ∘θ, θ)(x, c, s) with ℓ = Ad(a⁻¹)∘(Δ·B)∘a."""
        st = self.structure
        n, k, d1 = st.n, st.group.dim, self.d1
        if d1 == 0:
            return 0.0
        points = np.asarray(points, dtype=float)
        base = self.theta1.matrix(points)
        s = points[..., n + d1:]
        a = st.chart.matrix(s)
        Ad_inv = st.chart.rep_of(s, st.group.algebra.ad_basis, inverse=True)
        worst = 0.0
        scale = max(1.0, float(np.abs(base).max()))
        for delta in np.atleast_2d(shifts):
            moved = points.copy()
            moved[..., n: n + d1] += delta
            lhs = self.theta1.matrix(moved)
            ell = np.einsum("j,jri->ri", delta, self.coset_basis)  # (k, n)
            theta = base[..., k:, :]  # (..., n, N)
            shift = np.einsum("...rq,qi,...ij,...jN->...rN", Ad_inv, ell, a, theta)
            rhs = base.copy()
            rhs[..., :k, :] -= shift
            worst = max(worst, float(np.abs(lhs - rhs).max()))
        return worst / scale


def first_prolongation_bundle(struct: LocalGStructure, k_max: int = 1, strict: bool = False,
                              coset_radius: float = 0.5, tol: float = 1e-8) -> FirstProlongation:
    """P¹ = t⁻¹(𝔡) over U × G with its displacement form θ¹."""
    g = struct.group
    n, k = g.n, g.dim
    table = prolong(g, k_max)
    comp = torsion_complement(g, strict=strict)
    D = comp.delta_matrix
    solver = -np.linalg.pinv(D, rcond=1e-10) @ comp.image_projector
    coset = hom_basis_from_prolongation(g, table)
    if coset.size and np.abs(D @ coset.reshape(len(coset), -1).T).max() > tol:
        raise NoSolution("g^(1) does not lie in the kernel of δ")
    d1 = coset.shape[0]
    lo, hi = struct.base_box
    box = (np.concatenate([lo, -coset_radius * np.ones(d1)]), np.concatenate([hi, coset_radius * np.ones(d1)]))
    h = struct.h
    model = LocalModel.principal(h, struct.chart, np.eye(h.dim)[:, :k], n + d1, box)
    holder: dict[str, FirstProlongation] = {}

    def A(z):
        x, c = z[..., :n], z[..., n:]
        Sinv = struct.S_inv(x)
        Hm = holder["p"].particular(x)
        if d1:
            Hm = Hm + T.einsum("...j,jri->...ri", c, coset)
        top = -(Hm @ Sinv)
        cols = T.concatenate([top, Sinv], axis=-2)
        if not d1:
            return cols
        zero = np.zeros(T.value(z).shape[:-1] + (h.dim, d1))
        return T.concatenate([cols, T.lift(zero, z) if isinstance(z, Taylor) else zero], axis=-1)

    theta1 = make_principal_cartan(model, A)
    bundle = FirstProlongation(struct, table, comp, coset, model, theta1, solver)
    holder["p"] = bundle
    xs = struct.sample_base(8)
    res = bundle.solve_residual(xs)
    if res > 1e-6:
        raise NoSolution(f"no horizontal subspace with torsion in the complement (residual {res:.3e})")
    return bundle


def type1_connection(struct: LocalGStructure, strict: bool = False) -> CartanConnection:
    """The canonical Cartan connection of type (g ⋉ V)/g of a G-structure with g^(1) = 0."""
    table = prolong(struct.group, 1)
    if table.dim(1):
        raise NotType1(f"g^(1) has dimension {table.dim(1)}; the structure is not of type 1")
    bundle = first_prolongation_bundle(struct, 1, strict)
    return bundle.theta1.as_cartan()


# -- type 2 ----------------------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Type2Result:
    connection: CartanConnection
    bundle: FirstProlongation
    complement: TorsionComplement
    g_leakage: float
    splitting: SplittingReport


def g1_action_generators(g: LinearLieAlgebra, table: ProlongationTable) -> np.ndarray:
    """The action of g on g^(1) coordinates: (X·B)(u, w) = X B(u, w) − B(Xu, w) − B(u, Xw)."""
    B = table.basis(1)
    d1 = len(B)
    flat = B.reshape(d1, -1)
    out = np.zeros((g.dim, d1, d1))
    for i, X in enumerate(g.basis):
        moved = (np.einsum("ab,dbuw->dauw", X, B)
                 - np.einsum("daqw,qu->dauw", B, X) - np.einsum("dauq,qw->dauw", B, X))
        out[i] = np.linalg.lstsq(flat.T, moved.reshape(d1, -1).T, rcond=None)[0]
    return out


def type2_connection(struct: LocalGStructure, strict: bool = False) -> Type2Result:
    """θ² = (θ, ω, ω¹) on P¹ for the standard flat structure of a type-2 group.

    ω¹ is fixed by requiring the torsion of the G¹-structure P¹ → P (displacement
    form θ¹) to lie in the orthogonal complement 𝔡¹ of δ(g^(1)⊗V₁*), V₁ = g ⋉ V.
    The result takes values in a₂ = V ⊕ g ⊕ g^(1) with the jet bracket.
    """
    from .jets import g_infinity_truncated

    if not struct.is_flat:
        raise UnsupportedCurvedBase("the type-2 construction is implemented for the flat structure only")
    g = struct.group
    table = prolong(g, 2)
    if table.verdict != TYPE2:
        raise NotType2(f"prolongation verdict is {table.verdict}")
    bundle = first_prolongation_bundle(struct, 2, strict)
    n, k, d1 = g.n, g.dim, bundle.d1
    W, N = k + n, n + d1 + k
    kappa1 = bundle.theta1.kappa
    dkappa1 = exterior_derivative(kappa1)

    L = np.zeros((d1, W, W))
    L[:, :k, k:] = bundle.coset_basis
    g1 = LinearLieAlgebra(L, "g1")
    # G acts on V₁ = g ⊕ V by Ad ⊕ the defining representation
    rng_elems = g.sample_elements(6, 0x5EED)
    acting = []
    for a in rng_elems:
        Ad = np.array([g.coords(a @ X @ np.linalg.inv(a)) for X in g.basis]).T
        blk = np.zeros((W, W))
        blk[:k, :k], blk[k:, k:] = Ad, a
        acting.append(blk)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        comp1 = torsion_complement(g1, strict=False)
    g_leak = _leakage(comp1.image, comp1.complement, W, acting)
    if g_leak > INVARIANCE_TOL:
        msg = f"𝔡¹ is not G-invariant (leakage {g_leak:.3e})"
        if strict:
            raise NotGInvariant(msg)
        warnings.warn(msg, stacklevel=2)
    solver1 = -np.linalg.pinv(comp1.delta_matrix, rcond=1e-10) @ comp1.image_projector
    rho1 = g1_action_generators(g, table)
    hor = list(range(n)) + list(range(n + d1, N))
    E_hor = np.eye(N)[:, hor]  # (N, W)
    E_c = np.eye(N)[n: n + d1]  # (d1, N)
    E2 = _scatter2(N)
    chart = struct.chart
    i0, i1 = (np.array(combos(W, 2), dtype=int).reshape(-1, 2)[:, j] for j in range(2))

    def fn(z):
        batch = z.shape[:-1]
        th = kappa1.taylor(z)  # (..., W, N)
        C = th[..., :, hor]
        h0 = T.einsum("Iv,...vw->...Iw", E_hor, T.inv(C))
        F = T.einsum("...aQ,QIJ->...aIJ", evaluate_at(dkappa1, z), E2)
        t10 = T.einsum("...avJ,...Jw->...avw", T.einsum("...aIJ,...Iv->...avJ", F, h0), h0)
        tc = t10[..., :, i0, i1].reshape(batch + (-1,))
        H1 = T.einsum("ij,...j->...i", solver1, tc).reshape(batch + (d1, W))
        rho_inv = chart.rep_of(z[..., n + d1:], rho1, inverse=True)
        omega1 = T.einsum("...jc,cI->...jI", rho_inv, E_c) - H1 @ th
        return T.concatenate([th[..., k:, :], th[..., :k, :], omega1], axis=-2)

    a2 = g_infinity_truncated(g, 2, table)
    theta2 = FormField.exact(fn, 1, N, a2)
    model = LocalModel.principal(a2, chart, np.eye(a2.dim)[:, n: n + k], n + d1, bundle.model.base_box)
    conn = CartanConnection(model, theta2)
    return Type2Result(conn, bundle, comp1, g_leak, spencer_splitting(g, table))
