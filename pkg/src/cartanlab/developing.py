"""Flat connections: Maurer-Cartan residuals, development along paths, holonomy.

Development solves the left-logarithmic ODE φ'(t) = φ(t) ρ(κ(c(t))(c'(t)))
with classical RK4 on a fixed grid.  Each pair of steps is also taken as
one double step; the difference estimates the local error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import taylor as T
from .errors import DimensionMismatch, StepUnstable
from .forms import ChartMap, FormField, apply_multilinear, exterior_derivative, pullback, wedge_bracket
from .lie_core import LieAlgebra, MatrixRep, MultilinearFunction, ce_differential
from .matrix_group import (GroupChart, GroupValuedMap, left_log_derivative, project_to_group, relation_residual,
                           right_log_derivative)

LEFT, RIGHT = "left", "right"

DEFAULT_STEPS = 1024
PROJECT_EVERY = 64
PROJECT_TOL = 1e-9
STEP_TOL = 1e-6


def mc_residual(kappa: FormField, convention: str, points) -> float:
    """max |dκ ± ½[κ,κ]| relative to the terms; RIGHT uses +, LEFT uses −."""
    if convention not in (LEFT, RIGHT):
        raise ValueError(f"convention must be {LEFT!r} or {RIGHT!r}")
    sign = 1.0 if convention == RIGHT else -1.0
    d = exterior_derivative(kappa).components(points)
    b = 0.5 * wedge_bracket(kappa, kappa).components(points)
    scale = max(1.0, float(np.abs(d).max(initial=0.0)), float(np.abs(b).max(initial=0.0)))
    return float(np.abs(d + sign * b).max(initial=0.0)) / scale


def _coords_matrix(rep: MatrixRep) -> np.ndarray:
    G = rep.generators.reshape(rep.algebra.dim, -1)
    return np.linalg.pinv(G)  # (d*d, dim)


def log_derivative(phi: GroupValuedMap, side: str = LEFT) -> FormField:
    """δ^l φ = φ⁻¹dφ (side LEFT) or δ^r φ = dφ φ⁻¹ (side RIGHT), as a 1-form into the algebra."""
    rep = phi.rep
    P = _coords_matrix(rep)
    d = rep.rep_dim
    m = phi.dim
    if phi.exact:
        def fn(x):
            g = phi(x)
            dg = g.grad()  # (..., d, d, m)
            ginv = T.inv(g)
            dgm = dg.moveaxis(-1, -3)  # (..., m, d, d)
            ginv_b = ginv.reshape(ginv.shape[:-2] + (1, d, d))
            L = ginv_b @ dgm if side == LEFT else dgm @ ginv_b
            flat = L.reshape(L.shape[:-2] + (d * d,)) @ P  # (..., m, dim)
            return flat.swapaxes(-1, -2)

        return FormField.exact(fn, 1, m, rep.algebra, depth=1)

    op = left_log_derivative if side == LEFT else right_log_derivative

    def numeric(points):
        cols = [op(phi, points, np.broadcast_to(e, points.shape), tol=None) for e in np.eye(m)]
        return np.stack(cols, axis=-1)

    return FormField.sampled_components(numeric, 1, m, rep.algebra, fd_level=1)


def delta_l(phi: GroupValuedMap) -> FormField:
    return log_derivative(phi, LEFT)


def delta_r(phi: GroupValuedMap) -> FormField:
    return log_derivative(phi, RIGHT)


# -- paths ------------------------------------------------------------------------------------

def _smootherstep(u):
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u))


def _smootherstep_d(u):
    return 30.0 * u * u * (1.0 - u) ** 2


@dataclass(frozen=True, eq=False)
class Path:
    """Smooth path c: [0, 1] -> chart with its velocity."""

    dim: int
    position: Callable[[np.ndarray], np.ndarray]
    velocity: Callable[[np.ndarray], np.ndarray]
    kind: str = "custom"
    control_points: tuple = ()

    def __call__(self, t):
        return self.position(np.asarray(t, dtype=float))

    @property
    def closed(self) -> bool:
        return bool(np.abs(self(0.0) - self(1.0)).max() <= 1e-12)

    def velocity_residual(self, count: int = 17) -> float:
        """Velocity against central differences of the position."""
        t = np.linspace(0.05, 0.95, count)
        h = 1e-5
        fd = (self(t + h) - self(t - h)) / (2 * h)
        v = self.velocity(t)
        return float(np.abs(fd - v).max()) / max(1.0, float(np.abs(v).max()))

    @classmethod
    def polyline_smooth(cls, control_points) -> "Path":
        """Through the control points, one segment per step of 1/(k-1) in t.

        Within a segment the path moves along the straight line with the
        quintic smootherstep profile, so velocity and acceleration vanish at
        every control point and the path is C² overall.
        """
        P = np.atleast_2d(np.asarray(control_points, dtype=float))
        k = P.shape[0]
        if k < 2:
            raise DimensionMismatch("a polyline needs at least two control points")
        segs = k - 1

        def locate(t):
            t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
            idx = np.minimum((t * segs).astype(int), segs - 1)
            return idx, t * segs - idx

        def position(t):
            idx, u = locate(t)
            s = _smootherstep(u)[..., None]
            return P[idx] + s * (P[idx + 1] - P[idx])

        def velocity(t):
            idx, u = locate(t)
            return segs * _smootherstep_d(u)[..., None] * (P[idx + 1] - P[idx])

        return cls(P.shape[1], position, velocity, "polyline_smooth", tuple(map(tuple, P)))

    @classmethod
    def poly(cls, coefficients) -> "Path":
        """c(t) = sum_j C_j t^j for coefficient vectors C_j."""
        C = np.atleast_2d(np.asarray(coefficients, dtype=float))
        powers = np.arange(C.shape[0])

        def position(t):
            t = np.asarray(t, dtype=float)
            return (t[..., None] ** powers) @ C

        def velocity(t):
            t = np.asarray(t, dtype=float)
            dp = np.where(powers > 0, powers * t[..., None] ** np.maximum(powers - 1, 0), 0.0)
            return dp @ C

        return cls(C.shape[1], position, velocity, "poly", tuple(map(tuple, C)))

    @classmethod
    def straight(cls, a, b) -> "Path":
        a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
        return cls.poly([a, b - a])

    @classmethod
    def from_literal(cls, lit) -> "Path":
        kind = lit.get("kind")
        if kind == "polyline_smooth":
            return cls.polyline_smooth(lit["control_points"])
        if kind == "poly":
            return cls.poly(lit["control_points"])
        raise ValueError(f"unknown path kind {kind!r}")

    def to_literal(self) -> dict:
        return {"kind": self.kind, "control_points": [list(p) for p in self.control_points]}


def random_loop(lo, hi, rng: np.random.Generator, corners: int = 4) -> Path:
    """Closed smooth polyline through random points of the box."""
    pts = rng.uniform(lo, hi, size=(corners, np.size(lo)))
    return Path.polyline_smooth(np.vstack([pts, pts[:1]]))


def random_path(lo, hi, rng: np.random.Generator, corners: int = 3) -> Path:
    return Path.polyline_smooth(rng.uniform(lo, hi, size=(corners, np.size(lo))))


# -- development ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Development:
    times: np.ndarray
    values: np.ndarray  # (N+1, d, d)
    max_error_estimate: float
    projections: int

    @property
    def endpoint(self) -> np.ndarray:
        return self.values[-1]

    def left_log_derivative(self, rep: MatrixRep, checkpoints: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """φ⁻¹φ' by a five-point stencil at interior nodes, in algebra coordinates."""
        N = len(self.times) - 1
        h = self.times[1] - self.times[0]
        count = checkpoints or max(1, N // 10)
        idx = np.unique(np.linspace(2, N - 2, count).astype(int))
        V = self.values
        dphi = (V[idx - 2] - 8 * V[idx - 1] + 8 * V[idx + 1] - V[idx + 2]) / (12 * h)
        L = np.linalg.solve(V[idx], dphi)
        return self.times[idx], rep.coords(L, tol=None)


def _generator_path(kappa: FormField, rep: MatrixRep, path: Path, times: np.ndarray) -> np.ndarray:
    pts = path(times)
    vel = path.velocity(times)
    comps = kappa.components(pts)  # (T, w, n)
    X = np.einsum("twn,tn->tw", comps, vel)
    return np.einsum("tw,wab->tab", X, rep.generators)


def develop(kappa: FormField, rep: MatrixRep, path: Path, phi0=None, steps: int = DEFAULT_STEPS,
            step_tol: float = STEP_TOL) -> Development:
    """Solve φ' = φ ρ(κ(c)(c')) from φ(0) = φ0 with RK4 on ``steps`` steps."""
    if kappa.degree != 1 or kappa.dim != rep.algebra.dim:
        raise DimensionMismatch("κ must be a 1-form into the algebra of the representation")
    if path.dim != kappa.chart_dim:
        raise DimensionMismatch("path and form live on different charts")
    d = rep.rep_dim
    phi = np.eye(d) if phi0 is None else np.array(phi0, dtype=float)
    N = int(steps)
    if N < 2 or N % 2:
        raise ValueError("the step count must be an even number >= 2")
    h = 1.0 / N
    grid = np.linspace(0.0, 1.0, 2 * N + 1)
    M = _generator_path(kappa, rep, path, grid)
    tag = rep.relation

    def rk4(y, m0, mh, m1, dt):
        k1 = y @ m0
        k2 = (y + 0.5 * dt * k1) @ mh
        k3 = (y + 0.5 * dt * k2) @ mh
        k4 = (y + dt * k3) @ m1
        return y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)

    out = np.empty((N + 1, d, d))
    out[0] = phi
    worst, strikes, projections = 0.0, 0, 0
    for k in range(0, N, 2):
        j = 2 * k
        mid = rk4(phi, M[j], M[j + 1], M[j + 2], h)
        fine = rk4(mid, M[j + 2], M[j + 3], M[j + 4], h)
        coarse = rk4(phi, M[j], M[j + 2], M[j + 4], 2 * h)
        err = float(np.abs(fine - coarse).max()) / max(1.0, float(np.abs(fine).max()))
        worst = max(worst, err)
        strikes = strikes + 1 if err > step_tol else 0
        if strikes >= 3:
            raise StepUnstable(f"local error estimate {err:.3e} exceeds {step_tol:.0e} on consecutive steps; "
                               f"increase the step count")
        out[k + 1] = mid
        phi = fine
        if tag is not None and (k + 2) % PROJECT_EVERY == 0 and relation_residual(tag, phi) > PROJECT_TOL:
            phi = project_to_group(tag, phi)
            projections += 1
        out[k + 2] = phi
    return Development(np.linspace(0.0, 1.0, N + 1), out, worst, projections)


def holonomy(kappa: FormField, rep: MatrixRep, loop: Path, steps: int = DEFAULT_STEPS) -> np.ndarray:
    if not loop.closed:
        raise DimensionMismatch("holonomy needs a closed path")
    return develop(kappa, rep, loop, None, steps).endpoint


def holonomy_defect(kappa: FormField, rep: MatrixRep, loop: Path, steps: int = DEFAULT_STEPS) -> float:
    H = holonomy(kappa, rep, loop, steps)
    return float(np.abs(H - np.eye(rep.rep_dim)).max())


def delta_l_match_residual(dev: Development, kappa: FormField, rep: MatrixRep, path: Path) -> float:
    """max |φ⁻¹φ' − κ(c)(c')| at checkpoints along a development."""
    t, got = dev.left_log_derivative(rep)
    X = np.einsum("twn,tn->tw", kappa.components(path(t)), path.velocity(t))
    return float(np.abs(got - X).max()) / max(1.0, float(np.abs(X).max()))


# -- flat characteristic map ----------------------------------------------------------------

def flat_pullback(kappa: FormField, f: MultilinearFunction) -> FormField:
    """κ*f: the k-form (ξ_1..ξ_k) -> f(κξ_1, .., κξ_k) for alternating f."""
    if f.dim != kappa.dim:
        raise DimensionMismatch("f and κ live on algebras of different dimensions")
    k = f.arity
    if k == 0:
        c = float(np.asarray(f.coeffs))
        return FormField.constant(np.array([[c]]), 0, kappa.chart_dim, 1)
    return apply_multilinear(f, *([kappa] * k)) * (1.0 / math.factorial(k))


def chain_map_residual(kappa: FormField, alg: LieAlgebra, f: MultilinearFunction, points) -> float:
    """max |d(κ*f) − κ*(d_CE f)| relative to the terms."""
    lhs = exterior_derivative(flat_pullback(kappa, f)).components(points)
    rhs = flat_pullback(kappa, ce_differential(alg, f)).components(points)
    scale = max(1.0, float(np.abs(lhs).max(initial=0.0)), float(np.abs(rhs).max(initial=0.0)))
    return float(np.abs(lhs - rhs).max(initial=0.0)) / scale


def left_invariant_pullback(phi: GroupValuedMap, f: MultilinearFunction) -> FormField:
    """φ*(Lf), with Lf the left-invariant form on G extending f.

    Lf is evaluated through the Maurer-Cartan form in exponential
    coordinates, and φ is pulled back through the matrix logarithm, so φ must
    stay in the principal branch.  The result is a sampled form.
    """
    rep = phi.rep
    if f.dim != rep.algebra.dim:
        raise DimensionMismatch("f and the group live on algebras of different dimensions")
    chart = GroupChart(rep.algebra, rep)
    mc = FormField.exact(chart.left_mc, 1, chart.dim, rep.algebra)
    coords = ChartMap(phi.dim, chart.dim, lambda x: chart.coordinates_of(phi(x)), exact=False)
    return pullback(coords, flat_pullback(mc, f))
