"""Truncated multivariate Taylor arithmetic with array coefficients.

A :class:`Taylor` stores the coefficients of a polynomial in ``nvars``
perturbation variables, truncated at total degree ``order``.  Every
coefficient is an ndarray of one common shape (the *value shape*).  Seeding
chart coordinates with :meth:`Taylor.variables` and pushing them through an
evaluator written with ordinary arithmetic, ``@`` and the helpers below
yields all partial derivatives up to ``order`` exactly (up to roundoff).

Coefficients are stored per monomial, not per derivative:
``f(x0 + e) = sum_m c[m] * e**m``.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np


def _monomials(nvars: int, degree: int) -> list[tuple[int, ...]]:
    if nvars == 0:
        return [()] if degree == 0 else []
    out = []
    for first in range(degree, -1, -1):
        for rest in _monomials(nvars - 1, degree - first):
            out.append((first,) + rest)
    return out


class MonomialBasis:
    """Monomials of degree <= order, sorted by degree.

    The basis of a lower order is always a prefix of a higher one, so
    truncation is slicing.
    """

    def __init__(self, nvars: int, order: int):
        self.nvars = nvars
        self.order = order
        exps = [e for d in range(order + 1) for e in _monomials(nvars, d)]
        self.exponents = np.array(exps, dtype=int).reshape(len(exps), nvars)
        self.size = len(exps)
        self.index = {e: i for i, e in enumerate(exps)}
        self.degrees = self.exponents.sum(axis=1)

        pi, pj, pk = [], [], []
        for i, ei in enumerate(exps):
            for j, ej in enumerate(exps):
                if self.degrees[i] + self.degrees[j] <= order:
                    pi.append(i)
                    pj.append(j)
                    pk.append(self.index[tuple(a + b for a, b in zip(ei, ej))])
        perm = np.argsort(np.array(pk), kind="stable")
        self.pair_i = np.array(pi, dtype=int)[perm]
        self.pair_j = np.array(pj, dtype=int)[perm]
        pk_sorted = np.array(pk, dtype=int)[perm]
        self.pair_starts = np.searchsorted(pk_sorted, np.arange(self.size))

        # d/de_v maps monomial e (with e_v >= 1) to e - e_v in the order-1 basis
        self.deriv = []
        if order > 0:
            lower = basis(nvars, order - 1).index if order - 1 >= 0 else {}
            for v in range(nvars):
                src, dst, fac = [], [], []
                for k, e in enumerate(exps):
                    if e[v] >= 1:
                        f = list(e)
                        f[v] -= 1
                        src.append(k)
                        dst.append(lower[tuple(f)])
                        fac.append(float(e[v]))
                self.deriv.append((np.array(src, dtype=int), np.array(dst, dtype=int), np.array(fac)))


@lru_cache(maxsize=None)
def basis(nvars: int, order: int) -> MonomialBasis:
    return MonomialBasis(nvars, order)


def _lift(c: np.ndarray, ndim: int) -> np.ndarray:
    """Insert axes after the leading axis so the value part has ``ndim`` dims."""
    extra = ndim - (c.ndim - 1)
    if extra <= 0:
        return c
    return c.reshape((c.shape[0],) + (1,) * extra + c.shape[1:])


def _vaxis(axis: int) -> int:
    return axis + 1 if axis >= 0 else axis


class Taylor:
    """Truncated Taylor expansion; see the module docstring."""

    __slots__ = ("c", "basis")
    __array_ufunc__ = None  # make numpy defer to the reflected operators

    def __init__(self, coeffs: np.ndarray, basis_: MonomialBasis):
        self.c = coeffs
        self.basis = basis_

    # -- construction -------------------------------------------------
    @classmethod
    def variables(cls, x0: np.ndarray, order: int) -> "Taylor":
        """Seed ``x0`` (shape ``(..., n)``) as the n perturbation variables."""
        x0 = np.asarray(x0, dtype=float)
        n = x0.shape[-1]
        b = basis(n, order)
        c = np.zeros((b.size,) + x0.shape)
        c[0] = x0
        if order >= 1:
            for j in range(n):
                c[1 + j, ..., j] = 1.0
        return cls(c, b)

    @classmethod
    def constant(cls, a, basis_: MonomialBasis) -> "Taylor":
        a = np.asarray(a, dtype=float)
        c = np.zeros((basis_.size,) + a.shape)
        c[0] = a
        return cls(c, basis_)

    # -- basic properties ----------------------------------------------
    @property
    def order(self) -> int:
        return self.basis.order

    @property
    def nvars(self) -> int:
        return self.basis.nvars

    @property
    def shape(self) -> tuple[int, ...]:
        return self.c.shape[1:]

    @property
    def ndim(self) -> int:
        return self.c.ndim - 1

    @property
    def value(self) -> np.ndarray:
        return self.c[0]

    def __repr__(self) -> str:
        return f"Taylor(nvars={self.nvars}, order={self.order}, shape={self.shape})"

    def truncate(self, order: int) -> "Taylor":
        if order >= self.order:
            return self
        b = basis(self.nvars, order)
        return Taylor(self.c[: b.size], b)

    def nilpotent(self) -> "Taylor":
        """The expansion with its constant term removed."""
        c = self.c.copy()
        c[0] = 0.0
        return Taylor(c, self.basis)

    # -- derivatives ----------------------------------------------------
    def grad(self) -> "Taylor":
        """Partial derivatives as a new trailing axis; order drops by one."""
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 expansion")
        low = basis(self.nvars, self.order - 1)
        out = np.zeros((low.size,) + self.shape + (self.nvars,))
        for v, (src, dst, fac) in enumerate(self.basis.deriv):
            out[dst, ..., v] = fac.reshape((-1,) + (1,) * self.ndim) * self.c[src]
        return Taylor(out, low)

    def deriv(self, v: int) -> "Taylor":
        low = basis(self.nvars, self.order - 1)
        out = np.zeros((low.size,) + self.shape)
        src, dst, fac = self.basis.deriv[v]
        out[dst] = fac.reshape((-1,) + (1,) * self.ndim) * self.c[src]
        return Taylor(out, low)

    # -- linear structure -------------------------------------------------
    def map_linear(self, fn: Callable[[np.ndarray], np.ndarray]) -> "Taylor":
        """Apply a linear map acting on trailing axes to every coefficient."""
        return Taylor(fn(self.c), self.basis)

    def __getitem__(self, key) -> "Taylor":
        if not isinstance(key, tuple):
            key = (key,)
        return Taylor(self.c[(slice(None),) + key], self.basis)

    def reshape(self, *shape) -> "Taylor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return Taylor(self.c.reshape((self.c.shape[0],) + tuple(shape)), self.basis)

    def swapaxes(self, a: int, b: int) -> "Taylor":
        return Taylor(np.swapaxes(self.c, _vaxis(a), _vaxis(b)), self.basis)

    def moveaxis(self, src: int, dst: int) -> "Taylor":
        return Taylor(np.moveaxis(self.c, _vaxis(src), _vaxis(dst)), self.basis)

    def sum(self, axis: int) -> "Taylor":
        return Taylor(self.c.sum(axis=_vaxis(axis)), self.basis)

    @property
    def mT(self) -> "Taylor":
        return self.swapaxes(-1, -2)

    def __neg__(self) -> "Taylor":
        return Taylor(-self.c, self.basis)

    def __add__(self, other) -> "Taylor":
        if isinstance(other, Taylor):
            a, b = _match(self, other)
            nd = max(a.ndim, b.ndim)
            return Taylor(_lift(a.c, nd) + _lift(b.c, nd), a.basis)
        other = np.asarray(other, dtype=float)
        nd = max(self.ndim, other.ndim)
        c = _lift(self.c, nd).copy()
        c = np.broadcast_to(c, np.broadcast_shapes(c.shape, (1,) + other.shape)).copy()
        c[0] = c[0] + other
        return Taylor(c, self.basis)

    __radd__ = __add__

    def __sub__(self, other) -> "Taylor":
        return self + (-other)

    def __rsub__(self, other) -> "Taylor":
        return (-self) + other

    # -- products -----------------------------------------------------------
    def __mul__(self, other) -> "Taylor":
        if isinstance(other, Taylor):
            return product(self, other, np.multiply)
        other = np.asarray(other, dtype=float)
        nd = max(self.ndim, other.ndim)
        return Taylor(_lift(self.c, nd) * other, self.basis)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Taylor":
        if isinstance(other, Taylor):
            return self * reciprocal(other)
        return self * (1.0 / np.asarray(other, dtype=float))

    def __rtruediv__(self, other) -> "Taylor":
        return reciprocal(self) * other

    def __matmul__(self, other) -> "Taylor":
        if isinstance(other, Taylor):
            return product(self, other, np.matmul)
        other = np.asarray(other, dtype=float)
        nd = max(self.ndim, other.ndim)
        return Taylor(np.matmul(_lift(self.c, nd), other), self.basis)

    def __rmatmul__(self, other) -> "Taylor":
        other = np.asarray(other, dtype=float)
        nd = max(self.ndim, other.ndim)
        return Taylor(np.matmul(other, _lift(self.c, nd)), self.basis)

    def __pow__(self, k: int) -> "Taylor":
        if not isinstance(k, (int, np.integer)) or k < 0:
            raise ValueError("only non-negative integer powers are supported")
        out = Taylor.constant(np.ones(self.shape), self.basis)
        base = self
        while k:
            if k & 1:
                out = out * base
            k >>= 1
            if k:
                base = base * base
        return out


def _match(a: Taylor, b: Taylor) -> tuple[Taylor, Taylor]:
    if a.nvars != b.nvars:
        raise ValueError(f"variable count mismatch: {a.nvars} vs {b.nvars}")
    order = min(a.order, b.order)
    return a.truncate(order), b.truncate(order)


def product(a: Taylor, b: Taylor, op: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> Taylor:
    """Truncated product for a bilinear ``op`` acting on trailing axes."""
    a, b = _match(a, b)
    bs = a.basis
    nd = max(a.ndim, b.ndim)
    ac, bc = _lift(a.c, nd), _lift(b.c, nd)
    terms = op(ac[bs.pair_i], bc[bs.pair_j])
    return Taylor(np.add.reduceat(terms, bs.pair_starts, axis=0), bs)


def lift(x, like: Taylor) -> Taylor:
    return x if isinstance(x, Taylor) else Taylor.constant(x, like.basis)


def _first_taylor(items) -> Taylor | None:
    for it in items:
        if isinstance(it, Taylor):
            return it
    return None


def einsum(subscripts: str, *operands):
    """``np.einsum`` with at most two :class:`Taylor` operands.

    Subscripts must be explicit (contain ``->``).
    """
    tay = [i for i, op in enumerate(operands) if isinstance(op, Taylor)]
    if not tay:
        return np.einsum(subscripts, *operands)
    if len(tay) > 2:
        raise ValueError("einsum supports at most two Taylor operands")
    lhs, out = subscripts.replace(" ", "").split("->")
    specs = lhs.split(",")
    used = set(subscripts)
    z = next(ch for ch in "ZYXWVUTSRQPONMLKJIHGFEDCBA" if ch not in used)
    for i in tay:
        specs[i] = z + specs[i]
    expr = ",".join(specs) + "->" + z + out
    if len(tay) == 1:
        i = tay[0]
        args = [op.c if k == i else op for k, op in enumerate(operands)]
        return Taylor(np.einsum(expr, *args), operands[i].basis)
    i, j = tay
    a, b = _match(operands[i], operands[j])
    bs = a.basis
    args = list(operands)
    args[i] = a.c[bs.pair_i]
    args[j] = b.c[bs.pair_j]
    terms = np.einsum(expr, *args)
    return Taylor(np.add.reduceat(terms, bs.pair_starts, axis=0), bs)


def stack(items: Sequence, axis: int = 0):
    ref = _first_taylor(items)
    if ref is None:
        return np.stack([np.asarray(i, dtype=float) for i in items], axis=axis)
    order = min(i.order for i in items if isinstance(i, Taylor))
    lifted = [lift(i, ref).truncate(order) for i in items]
    shape = np.broadcast_shapes(*[t.shape for t in lifted])
    cs = [np.broadcast_to(_lift(t.c, len(shape)), (t.c.shape[0],) + shape) for t in lifted]
    return Taylor(np.stack(cs, axis=_vaxis(axis)), lifted[0].basis)


def concatenate(items: Sequence, axis: int = 0):
    ref = _first_taylor(items)
    if ref is None:
        return np.concatenate([np.asarray(i, dtype=float) for i in items], axis=axis)
    order = min(i.order for i in items if isinstance(i, Taylor))
    lifted = [lift(i, ref).truncate(order) for i in items]
    return Taylor(np.concatenate([t.c for t in lifted], axis=_vaxis(axis)), lifted[0].basis)


def value(x) -> np.ndarray:
    return x.value if isinstance(x, Taylor) else np.asarray(x)


# -- nonlinear functions --------------------------------------------------------

def _compose(x: Taylor, derivs: list[np.ndarray]) -> Taylor:
    """f(x) from f^(k)(x0) for k = 0..order, by the truncated Taylor series."""
    n = x.nilpotent()
    out = Taylor.constant(derivs[0], x.basis)
    power = None
    for k in range(1, x.order + 1):
        power = n if power is None else power * n
        out = out + power * (derivs[k] / math.factorial(k))
    return out


def reciprocal(x):
    if not isinstance(x, Taylor):
        return 1.0 / np.asarray(x, dtype=float)
    v = x.value
    derivs = [(-1.0) ** k * math.factorial(k) / v ** (k + 1) for k in range(x.order + 1)]
    return _compose(x, derivs)


def exp(x):
    if not isinstance(x, Taylor):
        return np.exp(x)
    e = np.exp(x.value)
    return _compose(x, [e] * (x.order + 1))


def sin(x):
    if not isinstance(x, Taylor):
        return np.sin(x)
    s, c = np.sin(x.value), np.cos(x.value)
    cycle = [s, c, -s, -c]
    return _compose(x, [cycle[k % 4] for k in range(x.order + 1)])


def cos(x):
    if not isinstance(x, Taylor):
        return np.cos(x)
    s, c = np.sin(x.value), np.cos(x.value)
    cycle = [c, -s, -c, s]
    return _compose(x, [cycle[k % 4] for k in range(x.order + 1)])


def sqrt(x):
    if not isinstance(x, Taylor):
        return np.sqrt(x)
    v = x.value
    derivs = []
    coef = 1.0
    for k in range(x.order + 1):
        derivs.append(coef * v ** (0.5 - k))
        coef *= 0.5 - k
    return _compose(x, derivs)


def inv(a):
    """Matrix inverse over the last two axes."""
    if not isinstance(a, Taylor):
        return np.linalg.inv(a)
    a0inv = np.linalg.inv(a.value)
    x = -(a0inv @ a.nilpotent())
    out = Taylor.constant(a0inv, a.basis)
    term = None
    for _ in range(a.order):
        term = x if term is None else term @ x
        out = out + term @ a0inv
    return out


def matmul(a, b):
    if isinstance(a, Taylor) or isinstance(b, Taylor):
        return a @ b
    return np.matmul(a, b)
