"""Matrix Lie group elements near the identity.

``expm`` works on plain arrays and on :class:`~cartanlab.taylor.Taylor`
expansions alike, so exponential charts differentiate exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from . import taylor as T
from .errors import DimensionMismatch, OutOfBranch
from .lie_core import LieAlgebra, MatrixRep
from .poly import Poly, evaluate_many
from .taylor import Taylor

EXPM_ORDER = 14


def expm(A):
    """Matrix exponential by scaling and squaring with an order-14 Taylor series.

    After scaling, the norm is at most 1/2, so the truncation error is below
    0.5**15 / 15! (about 2e-17).  Works batched, and on
    Taylor-valued matrices.
    """
    val = T.value(A)
    n = val.shape[-1]
    norm = float(np.abs(val).sum(axis=-2).max(initial=0.0)) if val.size else 0.0
    s = max(0, math.ceil(math.log2(norm / 0.5))) if norm > 0.5 else 0
    X = A * (1.0 / 2.0**s)
    out = X * 0.0 + np.eye(n)
    term = None
    for k in range(1, EXPM_ORDER + 1):
        term = X if term is None else (term @ X) * (1.0 / k)
        out = out + term
        if not np.abs(term.c if isinstance(term, Taylor) else term).max(initial=0.0) > 1e-18:
            break
    for _ in range(s):
        out = out @ out
    return out


def phi_left(M):
    """sum_k (-M)^k/(k+1)!, the left-trivialized derivative of exp, as a matrix."""
    val = T.value(M)
    d = val.shape[-1]
    batch = val.shape[:-2]
    top = T.concatenate([-M, np.broadcast_to(np.eye(d), batch + (d, d))], axis=-1)
    bottom = np.zeros(batch + (d, 2 * d))
    big = T.concatenate([top, bottom], axis=-2)
    E = expm(big)
    return E[..., :d, d:]


# -- defining relations ----------------------------------------------------------

_J2 = np.array([[0.0, 1.0], [-1.0, 0.0]])


def relation_residual(tag: str | None, g: np.ndarray) -> float:
    """Defining-relation residual of a group element for the tagged families."""
    g = np.asarray(g, dtype=float)
    n = g.shape[-1]
    eye = np.eye(n)
    gT = np.swapaxes(g, -1, -2)
    if tag is None:
        return 0.0
    if tag == "orthogonal":
        r = gT @ g - eye
    elif tag == "special":
        return float(np.abs(np.linalg.det(g) - 1.0).max(initial=0.0))
    elif tag == "symplectic":
        J = _J2 if n == 2 else np.block([[np.zeros((n // 2, n // 2)), np.eye(n // 2)],
                                          [-np.eye(n // 2), np.zeros((n // 2, n // 2))]])
        r = gT @ J @ g - J
    elif tag == "conformal":
        lam = np.abs(np.linalg.det(g)) ** (2.0 / n)
        r = gT @ g - lam[..., None, None] * eye
    elif tag == "euclidean":
        lin = g[..., :-1, :-1]
        r1 = np.swapaxes(lin, -1, -2) @ lin - np.eye(n - 1)
        r2 = g[..., -1, :] - eye[-1]
        return float(max(np.abs(r1).max(initial=0.0), np.abs(r2).max(initial=0.0)))
    elif tag == "unipotent":
        r = np.tril(g) - eye
    elif tag == "diagonal":
        r = g - np.einsum("...ii->...i", g)[..., None] * eye
    else:
        return 0.0
    return float(np.abs(r).max(initial=0.0))


def project_to_group(tag: str | None, g: np.ndarray) -> np.ndarray:
    """Nearest-point style correction onto the tagged group (polar/determinant)."""
    g = np.asarray(g, dtype=float)
    if tag == "orthogonal":
        u, _, vt = np.linalg.svd(g)
        return u @ vt
    if tag in ("special", "symplectic") and g.shape[-1] == 2:
        det = np.linalg.det(g)
        return g / np.sqrt(det)[..., None, None]
    if tag == "special":
        det = np.linalg.det(g)
        return g / (np.sign(det) * np.abs(det) ** (1.0 / g.shape[-1]))[..., None, None]
    if tag == "conformal":
        u, s, vt = np.linalg.svd(g)
        lam = np.exp(np.log(s).mean(axis=-1))
        return lam[..., None, None] * (u @ vt)
    if tag == "euclidean":
        out = g.copy()
        u, _, vt = np.linalg.svd(g[..., :-1, :-1])
        out[..., :-1, :-1] = u @ vt
        out[..., -1, :] = np.eye(g.shape[-1])[-1]
        return out
    return g


# -- group elements ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GroupElement:
    matrix: np.ndarray
    group_tag: str | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch("group elements are square matrices")
        object.__setattr__(self, "matrix", m)

    @property
    def rep_dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def condition_number(self) -> float:
        return float(np.linalg.cond(self.matrix))

    @property
    def relation_residual(self) -> float:
        return relation_residual(self.group_tag, self.matrix)

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(self.matrix @ other.matrix, self.group_tag)

    def inverse(self) -> "GroupElement":
        return GroupElement(np.linalg.inv(self.matrix), self.group_tag)

    @classmethod
    def identity(cls, d: int, tag: str | None = None) -> "GroupElement":
        return cls(np.eye(d), tag)


def exp(rep: MatrixRep, X) -> GroupElement:
    return GroupElement(expm(rep.matrix(np.asarray(X, dtype=float))), rep.relation)


def log(rep: MatrixRep, g: GroupElement | np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Principal-branch logarithm in algebra coordinates."""
    m = g.matrix if isinstance(g, GroupElement) else np.asarray(g, dtype=float)
    radius = float(np.abs(np.linalg.eigvals(m - np.eye(m.shape[0]))).max(initial=0.0))
    if radius >= 1.0:
        raise OutOfBranch(f"spectral radius of g - I is {radius:.3f} >= 1")
    L = scipy.linalg.logm(m)
    if np.iscomplexobj(L):
        if np.abs(L.imag).max() > 1e-10:
            raise OutOfBranch("logarithm is not real")
        L = L.real
    return rep.coords(L, tol=tol)


def Ad(rep: MatrixRep, g: GroupElement | np.ndarray, X) -> np.ndarray:
    """Adjoint action: coordinates of g rho(X) g^-1."""
    m = g.matrix if isinstance(g, GroupElement) else np.asarray(g, dtype=float)
    M = m @ rep.matrix(X) @ np.linalg.inv(m)
    return rep.coords(M)


def Ad_matrix(rep: MatrixRep, g: GroupElement | np.ndarray) -> np.ndarray:
    """Matrix of Ad(g) on algebra coordinates."""
    n = rep.algebra.dim
    return np.stack([Ad(rep, g, e) for e in np.eye(n)], axis=-1)


def left_translate(g: GroupElement, h: GroupElement) -> GroupElement:
    return g @ h


def right_translate(h: GroupElement, g: GroupElement) -> GroupElement:
    return h @ g


# -- group-valued maps ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GroupValuedMap:
    """A map from a chart box in R^m into a matrix group.

    ``evaluator`` maps points (..., m) to matrices (..., d, d).  When
    ``exact`` is set it also accepts Taylor expansions, which lets forms built
    from it differentiate exactly.
    """

    rep: MatrixRep
    dim: int
    evaluator: Callable
    box: tuple[np.ndarray, np.ndarray]
    exact: bool = False

    def __call__(self, x):
        return self.evaluator(x)

    def element(self, x) -> GroupElement:
        return GroupElement(np.asarray(self.evaluator(np.asarray(x, dtype=float))), self.rep.relation)

    @classmethod
    def exp_product(cls, rep: MatrixRep, factors: Sequence[Sequence[Poly]], box) -> "GroupValuedMap":
        """x -> exp(sum_i p_1i(x) X_i) ... exp(sum_i p_ri(x) X_i)."""
        factors = [list(f) for f in factors]
        m = factors[0][0].nvars
        for f in factors:
            if len(f) != rep.algebra.dim:
                raise DimensionMismatch("each factor needs one polynomial per algebra basis vector")

        def evaluator(x):
            out = None
            for f in factors:
                coords = evaluate_many(f, x)
                M = expm(T.einsum("...i,iab->...ab", coords, rep.generators))
                out = M if out is None else out @ M
            return out

        lo, hi = (np.asarray(b, dtype=float) for b in box)
        return cls(rep, m, evaluator, (lo, hi), exact=True)

    @classmethod
    def sampled(cls, rep: MatrixRep, dim: int, fn: Callable, box) -> "GroupValuedMap":
        lo, hi = (np.asarray(b, dtype=float) for b in box)
        return cls(rep, dim, fn, (lo, hi), exact=False)

    def left_multiplied(self, g0: np.ndarray) -> "GroupValuedMap":
        g0 = np.asarray(g0, dtype=float)
        return GroupValuedMap(self.rep, self.dim, lambda x: g0 @ self.evaluator(x), self.box, self.exact)

    def right_multiplied(self, g0: np.ndarray) -> "GroupValuedMap":
        g0 = np.asarray(g0, dtype=float)
        return GroupValuedMap(self.rep, self.dim, lambda x: self.evaluator(x) @ g0, self.box, self.exact)


FD_STEP = 1e-4


def _directional(phi: GroupValuedMap, x: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    h = FD_STEP * (1.0 + np.linalg.norm(x, axis=-1, keepdims=True))
    fp = np.asarray(phi(x + h * v))
    fm = np.asarray(phi(x - h * v))
    return np.asarray(phi(x)), (fp - fm) / (2.0 * h[..., None])


def left_log_derivative(phi: GroupValuedMap, x, v, tol: float = 1e-6) -> np.ndarray:
    """phi(x)^-1 D_v phi(x) in algebra coordinates (central differences)."""
    g, dg = _directional(phi, x, v)
    M = np.linalg.solve(g, dg)
    return phi.rep.coords(M, tol=tol)


def right_log_derivative(phi: GroupValuedMap, x, v, tol: float = 1e-6) -> np.ndarray:
    g, dg = _directional(phi, x, v)
    M = np.swapaxes(np.linalg.solve(np.swapaxes(g, -1, -2), np.swapaxes(dg, -1, -2)), -1, -2)
    return phi.rep.coords(M, tol=tol)


# -- exponential charts ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GroupChart:
    """Coordinates s on a matrix group near e.

    First kind (``blocks`` is None): a(s) = exp(sum_i s_i X_i).  Second kind:
    a(s) = exp(S_r) ... exp(S_1) where S_j uses the coordinates in
    ``blocks[j-1]``.  All formulas accept Taylor-valued s.
    """

    algebra: LieAlgebra
    rep: MatrixRep
    blocks: tuple[tuple[int, ...], ...] | None = None
    radius: float = 0.5

    @property
    def dim(self) -> int:
        return self.algebra.dim

    def _block_coords(self, s):
        if self.blocks is None:
            return [s]
        out = []
        for blk in self.blocks:
            mask = np.zeros((self.dim, self.dim))
            for i in blk:
                mask[i, i] = 1.0
            out.append(s @ mask)
        return out

    def rep_of(self, s, generators: np.ndarray, inverse: bool = False):
        """rho(a(s)) (or rho(a(s)^-1)) for a representation given by generators."""
        parts = self._block_coords(s)
        sign = -1.0 if inverse else 1.0
        mats = [expm(T.einsum("...i,iab->...ab", p, generators) * sign) for p in parts]
        # a = e_r ... e_1 (last block leftmost); a^-1 = e_1^-1 ... e_r^-1
        ordered = mats if inverse else mats[::-1]
        out = ordered[0]
        for m in ordered[1:]:
            out = out @ m
        return out

    def matrix(self, s):
        return self.rep_of(s, self.rep.generators)

    def left_mc(self, s):
        """Columns a^-1 da/ds_i in algebra coordinates, shape (..., dim, dim)."""
        ad_gens = self.algebra.ad_basis
        if self.blocks is None:
            return phi_left(T.einsum("...i,iab->...ab", s, ad_gens))
        parts = self._block_coords(s)
        total = None
        right = None  # Ad((e_{j-1} ... e_1)^-1)
        for j, (blk, p) in enumerate(zip(self.blocks, parts)):
            adS = T.einsum("...i,iab->...ab", p, ad_gens)
            contrib = phi_left(adS)
            mask = np.zeros((self.dim, self.dim))
            for i in blk:
                mask[i, i] = 1.0
            contrib = contrib @ mask
            if right is not None:
                contrib = right @ contrib
            total = contrib if total is None else total + contrib
            step = expm(-adS)
            right = step if right is None else right @ step
        return total

    def coordinates_of(self, g: np.ndarray, guess=None, tol: float = 1e-13, max_iter: int = 50) -> np.ndarray:
        """Chart coordinates of group elements (batched), principal branch."""
        g = np.asarray(g, dtype=float)
        if self.blocks is None:
            L = np.stack([np.real(scipy.linalg.logm(m)) for m in g.reshape(-1, *g.shape[-2:])])
            return self.rep.coords(L).reshape(g.shape[:-2] + (self.dim,))
        s = np.zeros(g.shape[:-2] + (self.dim,)) if guess is None else np.array(guess, dtype=float)
        for _ in range(max_iter):
            a = self.matrix(s)
            E = np.linalg.solve(a, g)
            L = np.stack([np.real(scipy.linalg.logm(m)) for m in E.reshape(-1, *E.shape[-2:])]).reshape(E.shape)
            y = self.rep.coords(L)
            ds = np.linalg.solve(self.left_mc(s), y[..., None])[..., 0]
            s = s + ds
            if np.abs(ds).max(initial=0.0) < tol:
                break
        return s
