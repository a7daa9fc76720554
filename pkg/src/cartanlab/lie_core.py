"""Finite-dimensional Lie algebras by structure constants.

Conventions: ``[e_i, e_j] = sum_k c[k, i, j] e_k``; vectors are coordinate
arrays over the algebra basis, with arbitrary leading batch axes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidAlgebra, InvalidRepresentation, NotInAlgebra

JACOBI_TOL = 1e-12
CLOSURE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class LieAlgebra:
    dim: int
    structure: np.ndarray
    basis_names: tuple[str, ...] = ()
    name: str = ""

    def __post_init__(self):
        c = np.asarray(self.structure, dtype=float)
        if c.shape != (self.dim,) * 3:
            raise InvalidAlgebra(f"structure constants must have shape {(self.dim,) * 3}, got {c.shape}")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "structure", c)
        names = tuple(self.basis_names) or tuple(f"e{i + 1}" for i in range(self.dim))
        if len(names) != self.dim:
            raise InvalidAlgebra("one basis name per basis vector is required")
        object.__setattr__(self, "basis_names", names)
        scale = max(1.0, float(np.abs(c).max(initial=0.0)))
        if np.abs(c + c.transpose(0, 2, 1)).max(initial=0.0) > 1e-14 * scale:
            raise InvalidAlgebra("structure constants are not antisymmetric")
        res = self.jacobi_residual()
        if res > JACOBI_TOL * scale**2:
            raise InvalidAlgebra(f"Jacobi identity fails (residual {res:.3e})")

    def bracket(self, X, Y) -> np.ndarray:
        X, Y = self._check(X), self._check(Y)
        return np.einsum("kij,...i,...j->...k", self.structure, X, Y)

    def ad(self, X) -> np.ndarray:
        """Matrix of ad(X) acting on coordinate vectors (batched over X)."""
        X = self._check(X)
        return np.einsum("kij,...i->...kj", self.structure, X)

    @property
    def ad_basis(self) -> np.ndarray:
        """ad(e_i) stacked along the first axis."""
        return np.transpose(self.structure, (1, 0, 2))

    def jacobi_residual(self) -> float:
        c = self.structure
        # [[e_i,e_j],e_k] has coefficients c[m,l,k] c[l,i,j]
        t = np.einsum("mlk,lij->mijk", c, c)
        cyc = t + t.transpose(0, 2, 3, 1) + t.transpose(0, 3, 1, 2)
        return float(np.abs(cyc).max(initial=0.0))

    def is_abelian(self) -> bool:
        return not np.any(self.structure)

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1:] != (self.dim,):
            raise DimensionMismatch(f"expected vectors of length {self.dim}, got shape {X.shape}")
        return X

    def to_definition(self) -> dict:
        brackets = []
        for i in range(self.dim):
            for j in range(i + 1, self.dim):
                coeffs = {self.basis_names[k]: float(self.structure[k, i, j])
                          for k in range(self.dim) if self.structure[k, i, j] != 0.0}
                if coeffs:
                    brackets.append({"i": i, "j": j, "coeffs": coeffs})
        return {"dim": self.dim, "basis": list(self.basis_names), "brackets": brackets}

    @classmethod
    def from_definition(cls, spec: Mapping, name: str = "") -> "LieAlgebra":
        dim = int(spec["dim"])
        names = list(spec.get("basis") or [f"e{i + 1}" for i in range(dim)])
        if len(names) != dim:
            raise InvalidAlgebra("basis list length must equal dim")
        index = {n: k for k, n in enumerate(names)}
        c = np.zeros((dim, dim, dim))
        for entry in spec.get("brackets", []):
            i, j = int(entry["i"]), int(entry["j"])
            if not (0 <= i < dim and 0 <= j < dim) or i == j:
                raise InvalidAlgebra(f"invalid bracket indices ({i}, {j})")
            for nm, val in entry["coeffs"].items():
                if nm not in index:
                    raise InvalidAlgebra(f"unknown basis name {nm!r}")
                c[index[nm], i, j] = float(val)
                c[index[nm], j, i] = -float(val)
        return cls(dim, c, tuple(names), name)

    def same_as(self, other: "LieAlgebra", tol: float = 1e-12) -> bool:
        return self.dim == other.dim and np.allclose(self.structure, other.structure, atol=tol, rtol=0)


def abelian_structure(dim: int) -> np.ndarray:
    return np.zeros((dim, dim, dim))


def bracket(alg: LieAlgebra, X, Y) -> np.ndarray:
    return alg.bracket(X, Y)


def ad(alg: LieAlgebra, X) -> np.ndarray:
    return alg.ad(X)


def killing_form(alg: LieAlgebra) -> np.ndarray:
    A = alg.ad_basis
    return np.einsum("iab,jba->ij", A, A)


# -- matrix representations ------------------------------------------------------

def _span_coords(gens: np.ndarray, M: np.ndarray) -> tuple[np.ndarray, float]:
    """Least-squares coordinates of matrices ``M`` in the span of ``gens``."""
    G = gens.reshape(gens.shape[0], -1).T
    flat = M.reshape(M.shape[:-2] + (-1,))
    coords = np.linalg.lstsq(G, flat.reshape(-1, G.shape[0]).T, rcond=None)[0].T
    coords = coords.reshape(flat.shape[:-1] + (gens.shape[0],))
    resid = np.abs(np.einsum("...i,iab->...ab", coords, gens) - M).max(initial=0.0)
    return coords, float(resid)


@dataclass(frozen=True, eq=False)
class MatrixRep:
    """Representation of ``algebra`` on R^d given by one matrix per basis vector."""

    algebra: LieAlgebra
    generators: np.ndarray
    relation: str | None = None  # defining relation tag of the group, if any

    def __post_init__(self):
        g = np.asarray(self.generators, dtype=float)
        if g.ndim != 3 or g.shape[0] != self.algebra.dim or g.shape[1] != g.shape[2]:
            raise InvalidRepresentation(
                f"need {self.algebra.dim} square generators, got array of shape {g.shape}")
        g = g.copy()
        g.setflags(write=False)
        object.__setattr__(self, "generators", g)
        res = self.homomorphism_residual()
        scale = max(1.0, float(np.abs(g).max(initial=0.0)) ** 2)
        if res > CLOSURE_TOL * scale:
            raise InvalidRepresentation(f"not a homomorphism (residual {res:.3e})")

    @property
    def rep_dim(self) -> int:
        return self.generators.shape[1]

    def matrix(self, X) -> np.ndarray:
        X = self.algebra._check(X)
        return np.einsum("...i,iab->...ab", X, self.generators)

    def coords(self, M, tol: float | None = 1e-8) -> np.ndarray:
        """Algebra coordinates of matrices in the generator span."""
        M = np.asarray(M, dtype=float)
        c, res = _span_coords(self.generators, M)
        scale = max(1.0, float(np.abs(M).max(initial=0.0)))
        if tol is not None and res > tol * scale:
            raise NotInAlgebra(f"matrix leaves the generator span (residual {res:.3e})")
        return c

    def is_faithful(self, tol: float = 1e-10) -> bool:
        G = self.generators.reshape(self.algebra.dim, -1)
        s = np.linalg.svd(G, compute_uv=False)
        return bool(s.size == 0 or s[-1] > tol * max(1.0, s[0]))

    def homomorphism_residual(self) -> float:
        g = self.generators
        lhs = np.einsum("kij,kab->ijab", self.algebra.structure, g)
        comm = np.einsum("iac,jcb->ijab", g, g)
        rhs = comm - comm.transpose(1, 0, 2, 3)
        return float(np.abs(lhs - rhs).max(initial=0.0))


def adjoint_rep(alg: LieAlgebra) -> MatrixRep:
    return MatrixRep(alg, alg.ad_basis)


def trivial_rep(alg: LieAlgebra, dim: int = 1) -> MatrixRep:
    return MatrixRep(alg, np.zeros((alg.dim, dim, dim)))


def _snap(c: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Remove least-squares noise from constants that are dyadic rationals."""
    snapped = np.round(c * 2.0**20) / 2.0**20
    return np.where(np.abs(c - snapped) < tol, snapped, c)


def algebra_from_matrices(generators: Sequence[np.ndarray], names: Sequence[str] = (), name: str = "",
                          relation: str | None = None) -> tuple[LieAlgebra, MatrixRep]:
    """Structure constants of a matrix Lie algebra from generator commutators."""
    gens = np.asarray(generators, dtype=float)
    n = gens.shape[0]
    G = gens.reshape(n, -1)
    s = np.linalg.svd(G, compute_uv=False)
    if n and s[-1] <= 1e-10 * max(1.0, s[0]):
        raise InvalidAlgebra("generators are linearly dependent")
    comm = np.einsum("iac,jcb->ijab", gens, gens)
    comm = comm - comm.transpose(1, 0, 2, 3)
    coords, res = _span_coords(gens, comm) if n else (np.zeros((0, 0, 0)), 0.0)
    if res > CLOSURE_TOL * max(1.0, float(np.abs(gens).max(initial=0.0)) ** 2):
        raise InvalidAlgebra(f"matrix span is not closed under commutators (residual {res:.3e})")
    c = np.transpose(coords, (2, 0, 1)) if n else np.zeros((0, 0, 0))
    c = _snap(0.5 * (c - c.transpose(0, 2, 1)))
    alg = LieAlgebra(n, c, tuple(names), name)
    return alg, MatrixRep(alg, gens, relation)


# -- subalgebras -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SubalgebraEmbedding:
    """A subalgebra g of h given by an inclusion matrix of shape (dim h, dim g)."""

    ambient: LieAlgebra
    sub: LieAlgebra
    inclusion: np.ndarray
    complement_basis: np.ndarray | None = None

    def __post_init__(self):
        inc = np.asarray(self.inclusion, dtype=float).reshape(self.ambient.dim, self.sub.dim)
        object.__setattr__(self, "inclusion", inc)
        if self.sub.dim and np.linalg.matrix_rank(inc, tol=1e-10) < self.sub.dim:
            raise InvalidAlgebra("inclusion must have full column rank")
        res = self.closure_residual()
        if res > CLOSURE_TOL:
            raise InvalidAlgebra(f"inclusion is not a Lie algebra homomorphism (residual {res:.3e})")
        if self.complement_basis is not None:
            comp = np.asarray(self.complement_basis, dtype=float).reshape(self.ambient.dim, -1)
            object.__setattr__(self, "complement_basis", comp)
            full = np.hstack([inc, comp])
            if full.shape[1] != self.ambient.dim or np.linalg.matrix_rank(full, tol=1e-10) < self.ambient.dim:
                raise InvalidAlgebra("inclusion and complement do not form a basis")

    def closure_residual(self) -> float:
        inc = self.inclusion
        E = inc.T  # embedded basis vectors
        lhs = self.ambient.bracket(E[:, None, :], E[None, :, :])
        rhs = np.einsum("kij,ak->ija", self.sub.structure, inc)
        return float(np.abs(lhs - rhs).max(initial=0.0))

    def embed(self, Y) -> np.ndarray:
        return np.asarray(Y, dtype=float) @ self.inclusion.T

    @classmethod
    def from_indices(cls, ambient: LieAlgebra, indices: Sequence[int], complement: Sequence[int] | None = None,
                     names: Sequence[str] = ()) -> "SubalgebraEmbedding":
        inc = np.eye(ambient.dim)[:, list(indices)]
        return cls.from_matrix(ambient, inc, None if complement is None else np.eye(ambient.dim)[:, list(complement)],
                               names or [ambient.basis_names[i] for i in indices])

    @classmethod
    def from_matrix(cls, ambient: LieAlgebra, inclusion, complement=None, names: Sequence[str] = (),
                    name: str = "") -> "SubalgebraEmbedding":
        """Derive the subalgebra's structure constants from the ambient bracket."""
        inc = np.asarray(inclusion, dtype=float).reshape(ambient.dim, -1)
        k = inc.shape[1]
        E = inc.T
        br = ambient.bracket(E[:, None, :], E[None, :, :])  # (k, k, dim h)
        coords = np.linalg.lstsq(inc, br.reshape(-1, ambient.dim).T, rcond=None)[0]
        c = coords.reshape(k, k, k)  # (sub index, i, j)
        c = _snap(0.5 * (c - c.transpose(0, 2, 1)))
        sub = LieAlgebra(k, c, tuple(names), name)
        return cls(ambient, sub, inc, complement)


def identity_embedding(alg: LieAlgebra) -> SubalgebraEmbedding:
    return SubalgebraEmbedding(alg, alg, np.eye(alg.dim))


# -- multilinear functions -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MultilinearFunction:
    """k-linear real function on an algebra, stored as a full coefficient tensor."""

    dim: int
    coeffs: np.ndarray
    symmetric: bool = False
    alternating: bool = False

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim and set(c.shape) != {self.dim}:
            raise DimensionMismatch(f"coefficient tensor must have all axes of length {self.dim}")
        object.__setattr__(self, "coeffs", c)
        if self.symmetric and self.arity > 1:
            if _max_perm_defect(c, alternating=False) > 0.0:
                raise InvalidAlgebra("declared symmetric but coefficient tensor is not")
        if self.alternating and self.arity > 1:
            if _max_perm_defect(c, alternating=True) > 0.0:
                raise InvalidAlgebra("declared alternating but coefficient tensor is not")

    @property
    def arity(self) -> int:
        return self.coeffs.ndim

    def __call__(self, *vectors) -> np.ndarray:
        if len(vectors) != self.arity:
            raise DimensionMismatch(f"expected {self.arity} arguments, got {len(vectors)}")
        letters = "abcdefghij"[: self.arity]
        expr = letters + "," + ",".join(f"...{ch}" for ch in letters) + "->..."
        return np.einsum(expr, self.coeffs, *[np.asarray(v, dtype=float) for v in vectors])

    @classmethod
    def symmetrize(cls, coeffs: np.ndarray) -> "MultilinearFunction":
        c = np.asarray(coeffs, dtype=float)
        k = c.ndim
        perms = list(itertools.permutations(range(k)))
        s = sum(np.transpose(c, p) for p in perms) / len(perms)
        # exact symmetry after averaging may still differ by roundoff; re-average ordered copies
        s = _exact_symmetric(s)
        return cls(c.shape[0], s, symmetric=True)

    @classmethod
    def antisymmetrize(cls, coeffs: np.ndarray) -> "MultilinearFunction":
        c = np.asarray(coeffs, dtype=float)
        k = c.ndim
        out = np.zeros_like(c)
        for p in itertools.permutations(range(k)):
            out = out + _perm_sign(p) * np.transpose(c, p)
        out = _exact_alternating(out / math.factorial(k))
        return cls(c.shape[0], out, alternating=True)


def _perm_sign(p: Sequence[int]) -> int:
    p = list(p)
    sign = 1
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sign = -sign
    return sign


def _max_perm_defect(c: np.ndarray, alternating: bool) -> float:
    worst = 0.0
    for a in range(c.ndim - 1):
        swapped = np.swapaxes(c, a, a + 1)
        diff = c + swapped if alternating else c - swapped
        worst = max(worst, float(np.abs(diff).max(initial=0.0)))
    return worst


def _exact_symmetric(c: np.ndarray) -> np.ndarray:
    """Copy each sorted-index entry to all its permutations."""
    out = np.empty_like(c)
    for idx in itertools.product(range(c.shape[0]), repeat=c.ndim):
        out[idx] = c[tuple(sorted(idx))]
    return out


def _exact_alternating(c: np.ndarray) -> np.ndarray:
    out = np.zeros_like(c)
    for idx in itertools.product(range(c.shape[0]), repeat=c.ndim):
        if len(set(idx)) < len(idx):
            continue
        order = sorted(range(len(idx)), key=lambda t: idx[t])
        out[idx] = _perm_sign(order) * c[tuple(sorted(idx))]
    return out


def dual_basis_form(dim: int, indices: Sequence[int]) -> MultilinearFunction:
    """e_{i1}* ^ ... ^ e_{ik}* with the determinant normalization."""
    k = len(indices)
    c = np.zeros((dim,) * k)
    for p in itertools.permutations(range(k)):
        c[tuple(indices[q] for q in p)] += _perm_sign(p)
    return MultilinearFunction(dim, c, alternating=True)


def ce_differential(alg: LieAlgebra, f: MultilinearFunction) -> MultilinearFunction:
    """(df)(X_0..X_k) = sum_{i<j} (-1)^{i+j} f([X_i,X_j], X_0..^i..^j..X_k)."""
    if not f.alternating and f.arity > 1:
        raise InvalidAlgebra("the Chevalley-Eilenberg differential needs an alternating function")
    k = f.arity
    n = alg.dim
    if k + 1 > n or k == 0:
        return MultilinearFunction(n, np.zeros((n,) * (k + 1)), alternating=True)
    F = f.coeffs
    out = np.zeros((n,) * (k + 1))
    for i in range(k + 1):
        for j in range(i + 1, k + 1):
            t = np.tensordot(alg.structure, F, axes=([0], [0]))  # axes: a_i, a_j, rest
            out += (-1) ** (i + j) * np.moveaxis(t, [0, 1], [i, j])
    return MultilinearFunction(n, _exact_alternating(out), alternating=True)


def invariance_residual(alg: LieAlgebra, f: MultilinearFunction) -> float:
    """max |sum_i f(X_1, .., [Z, X_i], .., X_k)| over basis Z and basis tuples."""
    F = f.coeffs
    worst = 0.0
    for z in range(alg.dim):
        adz = alg.ad_basis[z]
        total = np.zeros_like(F)
        for i in range(f.arity):
            # f(.., ad_z e_b, ..) = sum_a F[.., a, ..] adz[a, b]
            total = total + np.moveaxis(np.tensordot(F, adz, axes=([i], [0])), -1, i)
        worst = max(worst, float(np.abs(total).max(initial=0.0)))
    return worst


def killing_multilinear(alg: LieAlgebra) -> MultilinearFunction:
    return MultilinearFunction(alg.dim, killing_form(alg), symmetric=True)


def trace_form(rep: MatrixRep, k: int) -> MultilinearFunction:
    """Symmetrized trace tr(rho(X_1)...rho(X_k))."""
    g = rep.generators
    n = rep.algebra.dim
    letters = "abcdefgh"
    if k > 8:
        raise ValueError("trace forms above arity 8 are not supported")
    # tr(g_{i1} g_{i2} ... g_{ik}) via chained einsum
    idx = [f"{letters[m]}{letters[(m + 1) % k]}" for m in range(k)]
    tensor_letters = "ijklmnop"[:k]
    expr = ",".join(f"{tensor_letters[m]}{idx[m]}" for m in range(k)) + "->" + tensor_letters
    t = np.einsum(expr, *([g] * k)) if k > 1 else np.einsum("iaa->i", g)
    return MultilinearFunction.symmetrize(t) if k > 1 else MultilinearFunction(n, t, symmetric=True)


def polarize(p: Callable[[np.ndarray], float], dim: int, k: int) -> MultilinearFunction:
    """Symmetric k-linear f with f(X,..,X) = p(X) for a homogeneous degree-k p.

    f(X_1..X_k) = 1/k! sum over subsets S of (-1)^(k-|S|) p(sum_{i in S} X_i).
    """
    basis = np.eye(dim)
    c = np.zeros((dim,) * k)
    for idx in itertools.combinations_with_replacement(range(dim), k):
        total = 0.0
        for r in range(1, k + 1):
            for S in itertools.combinations(range(k), r):
                X = sum(basis[idx[s]] for s in S)
                total += (-1) ** (k - r) * p(X)
        c[idx] = total / math.factorial(k)
    return MultilinearFunction(dim, _exact_symmetric(c), symmetric=True)


def wedge_functions(f: MultilinearFunction, g: MultilinearFunction) -> MultilinearFunction:
    """Wedge product of alternating functions with the determinant normalization."""
    p, q = f.arity, g.arity
    outer = np.multiply.outer(f.coeffs, g.coeffs)
    res = MultilinearFunction.antisymmetrize(outer)
    scale = math.factorial(p + q) / (math.factorial(p) * math.factorial(q))
    return MultilinearFunction(f.dim, res.coeffs * scale, alternating=True)


# -- semidirect products --------------------------------------------------------------

def semidirect(rep: MatrixRep, V_dim: int | None = None, name: str = "") -> LieAlgebra:
    """g x| V with basis (g..., V...) and [(X,u),(Y,v)] = ([X,Y], Xv - Yu)."""
    g = rep.algebra
    n = rep.rep_dim
    if V_dim is not None and V_dim != n:
        raise DimensionMismatch(f"representation acts on R^{n}, not R^{V_dim}")
    d = g.dim + n
    c = np.zeros((d, d, d))
    c[: g.dim, : g.dim, : g.dim] = g.structure
    R = rep.generators  # R[i, a, b]
    for i in range(g.dim):
        for b in range(n):
            # [X_i, v_b] = rho(X_i) v_b = sum_a R[i, a, b] v_a
            c[g.dim:, i, g.dim + b] = R[i, :, b]
            c[g.dim:, g.dim + b, i] = -R[i, :, b]
    names = tuple(g.basis_names) + tuple(f"v{b + 1}" for b in range(n))
    return LieAlgebra(d, c, names, name)


def affine_rep(rep: MatrixRep, algebra: LieAlgebra | None = None, relation: str | None = None) -> MatrixRep:
    """Faithful (n+1)-dimensional matrices [[rho(X), v], [0, 0]] of g x| V."""
    alg = algebra or semidirect(rep)
    g = rep.algebra
    n = rep.rep_dim
    gens = np.zeros((alg.dim, n + 1, n + 1))
    gens[: g.dim, :n, :n] = rep.generators
    for b in range(n):
        gens[g.dim + b, b, n] = 1.0
    return MatrixRep(alg, gens, relation)


def semidirect_embedding(alg: LieAlgebra, g: LieAlgebra) -> SubalgebraEmbedding:
    """g inside g x| V, with V as complement."""
    n = alg.dim - g.dim
    inc = np.eye(alg.dim)[:, : g.dim]
    comp = np.eye(alg.dim)[:, g.dim:]
    return SubalgebraEmbedding(alg, g, inc, comp if n else None)


# -- preset algebras --------------------------------------------------------------------

def _E(n: int, i: int, j: int) -> np.ndarray:
    m = np.zeros((n, n))
    m[i, j] = 1.0
    return m


def so_generators(n: int) -> tuple[list[np.ndarray], list[str]]:
    if n == 2:
        return [_E(2, 1, 0) - _E(2, 0, 1)], ["r"]
    if n == 3:
        return ([_E(3, 2, 1) - _E(3, 1, 2), _E(3, 0, 2) - _E(3, 2, 0), _E(3, 1, 0) - _E(3, 0, 1)],
                ["L1", "L2", "L3"])
    gens, names = [], []
    for i in range(n):
        for j in range(i + 1, n):
            gens.append(_E(n, j, i) - _E(n, i, j))
            names.append(f"L{i + 1}{j + 1}")
    return gens, names


def so(n: int) -> tuple[LieAlgebra, MatrixRep]:
    gens, names = so_generators(n)
    return algebra_from_matrices(gens, names, f"so{n}", relation="orthogonal")


def gl(n: int) -> tuple[LieAlgebra, MatrixRep]:
    gens = [_E(n, i, j) for i in range(n) for j in range(n)]
    names = [f"E{i + 1}{j + 1}" for i in range(n) for j in range(n)]
    return algebra_from_matrices(gens, names, f"gl{n}")


def sl2() -> tuple[LieAlgebra, MatrixRep]:
    H = np.diag([1.0, -1.0])
    return algebra_from_matrices([H, _E(2, 0, 1), _E(2, 1, 0)], ["H", "E", "F"], "sl2", relation="special")


def sp2() -> tuple[LieAlgebra, MatrixRep]:
    """sp(2, R): 2x2 matrices X with X^T J + J X = 0."""
    H = np.diag([1.0, -1.0])
    return algebra_from_matrices([H, _E(2, 0, 1), _E(2, 1, 0)], ["H", "E", "F"], "sp2", relation="symplectic")


def heisenberg() -> tuple[LieAlgebra, MatrixRep]:
    return algebra_from_matrices([_E(3, 0, 1), _E(3, 1, 2), _E(3, 0, 2)], ["X", "Y", "Z"], "heis3",
                                 relation="unipotent")


def abelian(n: int) -> tuple[LieAlgebra, MatrixRep]:
    return algebra_from_matrices([_E(n, i, i) for i in range(n)], [f"a{i + 1}" for i in range(n)], f"abelian{n}",
                                 relation="diagonal")


def co(n: int) -> tuple[LieAlgebra, MatrixRep]:
    gens, names = so_generators(n)
    return algebra_from_matrices([np.eye(n)] + gens, ["I"] + names, f"co{n}", relation="conformal")


def borel() -> tuple[LieAlgebra, MatrixRep]:
    H = np.diag([1.0, -1.0])
    return algebra_from_matrices([H, _E(2, 0, 1)], ["H", "E"], "borel", relation="special")


def euclidean(n: int) -> tuple[LieAlgebra, MatrixRep]:
    _, rep = so(n)
    alg = semidirect(rep, name=f"e{n}")
    return alg, affine_rep(rep, alg, relation="euclidean")


def affine(n: int) -> tuple[LieAlgebra, MatrixRep]:
    _, rep = gl(n)
    alg = semidirect(rep, name=f"aff{n}")
    return alg, affine_rep(rep, alg)


ALGEBRA_PRESETS: dict[str, Callable[[], tuple[LieAlgebra, MatrixRep]]] = {
    "abelian1": lambda: abelian(1),
    "abelian2": lambda: abelian(2),
    "abelian3": lambda: abelian(3),
    "heis3": heisenberg,
    "so2": lambda: so(2),
    "so3": lambda: so(3),
    "sl2": sl2,
    "gl1": lambda: gl(1),
    "gl2": lambda: gl(2),
    "gl3": lambda: gl(3),
    "gl4": lambda: gl(4),
    "sp2": sp2,
    "co2": lambda: co(2),
    "co3": lambda: co(3),
    "e2": lambda: euclidean(2),
    "e3": lambda: euclidean(3),
    "aff1": lambda: affine(1),
    "aff2": lambda: affine(2),
    "borel": borel,
}


def preset(name: str) -> tuple[LieAlgebra, MatrixRep]:
    """Named algebra with its defining matrix representation."""
    try:
        return ALGEBRA_PRESETS[name]()
    except KeyError:
        raise InvalidAlgebra(f"unknown algebra preset {name!r}; known: {sorted(ALGEBRA_PRESETS)}") from None


def linear_part(name: str) -> tuple[LieAlgebra, MatrixRep]:
    """For semidirect presets, the linear algebra g acting on V."""
    table = {"e2": lambda: so(2), "e3": lambda: so(3), "aff1": lambda: gl(1), "aff2": lambda: gl(2)}
    return table[name]()
