"""Sparse multivariate polynomials with real coefficients."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .taylor import Taylor


def _parse_exponent(key: str, nvars: int) -> tuple[int, ...]:
    key = key.strip()
    if "," in key:
        exps = tuple(int(p) for p in key.split(","))
    elif key == "" and nvars == 0:
        exps = ()
    elif len(key) == nvars and key.isdigit():
        exps = tuple(int(ch) for ch in key)
    else:
        raise ValueError(f"cannot parse monomial exponent string {key!r} for {nvars} variables")
    if len(exps) != nvars or any(e < 0 for e in exps):
        raise ValueError(f"monomial {key!r} does not have {nvars} non-negative exponents")
    return exps


@dataclass(frozen=True)
class Poly:
    """Polynomial in ``nvars`` variables stored as {exponent tuple: coefficient}."""

    nvars: int
    terms: Mapping[tuple[int, ...], float]

    def __post_init__(self):
        clean = {tuple(int(v) for v in k): float(c) for k, c in self.terms.items() if c != 0.0}
        for k in clean:
            if len(k) != self.nvars:
                raise ValueError(f"monomial {k} has wrong arity for {self.nvars} variables")
        object.__setattr__(self, "terms", clean)

    @classmethod
    def zero(cls, nvars: int) -> "Poly":
        return cls(nvars, {})

    @classmethod
    def const(cls, nvars: int, c: float) -> "Poly":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def var(cls, nvars: int, i: int) -> "Poly":
        e = [0] * nvars
        e[i] = 1
        return cls(nvars, {tuple(e): 1.0})

    @classmethod
    def random(cls, nvars: int, degree: int, rng: np.random.Generator, scale: float = 1.0) -> "Poly":
        from .taylor import basis

        exps = basis(nvars, degree).exponents
        coeffs = rng.uniform(-scale, scale, size=len(exps))
        return cls(nvars, {tuple(e): c for e, c in zip(exps, coeffs)})

    @classmethod
    def from_literal(cls, lit: Mapping[str, float], nvars: int) -> "Poly":
        return cls(nvars, {_parse_exponent(k, nvars): float(v) for k, v in lit.items()})

    def to_literal(self) -> dict[str, float]:
        return {",".join(str(e) for e in k): c for k, c in sorted(self.terms.items())}

    @property
    def degree(self) -> int:
        return max((sum(k) for k in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "Poly") -> "Poly":
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0.0) + c
        return Poly(self.nvars, out)

    def __neg__(self) -> "Poly":
        return Poly(self.nvars, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __mul__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            return Poly(self.nvars, {k: c * float(other) for k, c in self.terms.items()})
        out: dict[tuple[int, ...], float] = {}
        for ka, ca in self.terms.items():
            for kb, cb in other.terms.items():
                k = tuple(a + b for a, b in zip(ka, kb))
                out[k] = out.get(k, 0.0) + ca * cb
        return Poly(self.nvars, out)

    __rmul__ = __mul__

    def diff(self, i: int) -> "Poly":
        out = {}
        for k, c in self.terms.items():
            if k[i] > 0:
                e = list(k)
                e[i] -= 1
                out[tuple(e)] = c * k[i]
        return Poly(self.nvars, out)

    def __call__(self, x):
        """Evaluate at points ``x`` of shape (..., nvars); ndarray or Taylor."""
        return evaluate_many([self], x)[..., 0]


def evaluate_many(polys: Iterable[Poly], x):
    """Stack the values of several polynomials on a trailing axis."""
    polys = list(polys)
    if not polys:
        raise ValueError("no polynomials to evaluate")
    nvars = polys[0].nvars
    monos = sorted({k for p in polys for k in p.terms})
    coeff = np.zeros((len(monos), len(polys)))
    index = {k: i for i, k in enumerate(monos)}
    for j, p in enumerate(polys):
        for k, c in p.terms.items():
            coeff[index[k], j] = c
    mvals = monomial_values(monos, x, nvars)
    if mvals is None:
        batch = x.shape[:-1]
        if isinstance(x, Taylor):
            return Taylor.constant(np.zeros(batch + (len(polys),)), x.basis)
        return np.zeros(batch + (len(polys),))
    if isinstance(mvals, Taylor):
        from . import taylor as T
        return T.einsum("...m,mj->...j", mvals, coeff)
    return mvals @ coeff


def monomial_values(monos, x, nvars: int):
    """Values of the listed monomials at x, stacked on a trailing axis."""
    from . import taylor as T

    if not monos:
        return None
    if not isinstance(x, Taylor):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != nvars:
            raise ValueError(f"expected points with {nvars} coordinates, got {x.shape[-1]}")
        if nvars == 0:
            return np.ones(x.shape[:-1] + (len(monos),))
        e = np.array(monos, dtype=float)
        return np.prod(x[..., None, :] ** e, axis=-1)
    if x.shape[-1] != nvars:
        raise ValueError(f"expected points with {nvars} coordinates, got {x.shape[-1]}")
    powers: dict[tuple[int, int], Taylor] = {}

    def power(i: int, e: int) -> Taylor:
        if (i, e) not in powers:
            powers[(i, e)] = x[..., i] if e == 1 else power(i, e - 1) * x[..., i]
        return powers[(i, e)]

    ones = T.lift(np.ones(x.shape[:-1]), x)
    cols = []
    for m in monos:
        val = None
        for i, e in enumerate(m):
            if e:
                val = power(i, e) if val is None else val * power(i, e)
        cols.append(ones if val is None else val)
    return T.stack(cols, axis=-1)


@dataclass(frozen=True)
class PolyMatrix:
    """Matrix of polynomials, e.g. a map from a chart into Hom(R^m, h)."""

    nvars: int
    entries: tuple[tuple[Poly, ...], ...]

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.entries), len(self.entries[0]) if self.entries else 0)

    @classmethod
    def constant(cls, mat: np.ndarray, nvars: int) -> "PolyMatrix":
        mat = np.atleast_2d(np.asarray(mat, dtype=float))
        return cls(nvars, tuple(tuple(Poly.const(nvars, float(v)) for v in row) for row in mat))

    @classmethod
    def random(cls, shape, nvars: int, degree: int, rng: np.random.Generator, scale: float = 1.0) -> "PolyMatrix":
        return cls(nvars, tuple(tuple(Poly.random(nvars, degree, rng, scale) for _ in range(shape[1]))
                                for _ in range(shape[0])))

    @classmethod
    def from_literal(cls, lit: Mapping, nvars: int) -> "PolyMatrix":
        rows = lit["entries"]
        return cls(nvars, tuple(tuple(Poly.from_literal(e, nvars) for e in row) for row in rows))

    def to_literal(self) -> dict:
        return {"entries": [[p.to_literal() for p in row] for row in self.entries]}

    def __add__(self, other: "PolyMatrix") -> "PolyMatrix":
        return PolyMatrix(self.nvars, tuple(tuple(a + b for a, b in zip(ra, rb))
                                            for ra, rb in zip(self.entries, other.entries)))

    def scale(self, s: float) -> "PolyMatrix":
        return PolyMatrix(self.nvars, tuple(tuple(a * s for a in row) for row in self.entries))

    def __call__(self, x):
        r, c = self.shape
        flat = [p for row in self.entries for p in row]
        vals = evaluate_many(flat, x)
        return vals.reshape(vals.shape[:-1] + (r, c))
