"""Verification suites: each runs the residual checks for one family of constructions.

A suite returns named :class:`Check` entries, a JSON-ready ``info`` mapping
and optional residual-vs-parameter series.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .cartan import (CartanConnection, GeneralizedCartanConnection, Tolerances, curvature, equivariance_residual,
                     reproduction_residual, validate)
from .checks import Check
from .chern_weil import chern_weil_form, closedness_residual, transgression_residual
from .developing import (LEFT, RIGHT, delta_l, delta_l_match_residual, delta_r, develop, holonomy_defect,
                         mc_residual, random_loop, random_path)
from .extension import (ExtendedModel, equivariant_form, q_flat_connection, q_flat_form, q_flat_form_inverse,
                        q_flat_inverse, quotient_residual, restrict_connection)
from .forms import FormField, combos, exterior_derivative, rho_wedge, sample_points
from .jets import JetVectorField, ball_points, flat_model_connection, flow_residual, group_axiom_residuals
from .lie_core import LieAlgebra, MultilinearFunction, adjoint_rep, invariance_residual, semidirect
from .matrix_group import GroupValuedMap, expm
from .poly import Poly
from .prolongation import (INVARIANCE_TOL, TYPE1, TYPE2, LinearLieAlgebra, LocalGStructure, delta_on_hom,
                           first_prolongation_bundle, iterated_prolongation_distance, nullspace, prolong,
                           spencer_splitting, torsion_complement, torsion_function, type1_connection,
                           type2_connection)
from .taylor import basis as monomial_basis

COUNT_TOL = 0.1  # integer equalities: any mismatch is a FAIL


@dataclass
class SuiteResult:
    checks: list[Check]
    info: dict = field(default_factory=dict)
    series: dict[str, list[tuple[float, float]]] = field(default_factory=dict)


def _count_check(name: str, got: int, expected: int, anchor: str) -> Check:
    return Check(name, float(abs(got - expected)), COUNT_TOL, anchor, f"got {got}, expected {expected}")


def _prefixed(prefix: str, checks: list[Check]) -> list[Check]:
    return [Check(f"{prefix}.{c.name}", c.residual, c.tolerance, c.anchor, c.detail) for c in checks]


def _max_abs(a) -> float:
    return float(np.abs(np.asarray(a)).max(initial=0.0))


# -- cartan ----------------------------------------------------------------------------------

def check_suite(conn: GeneralizedCartanConnection, samples: int, seed: int, flat: bool = False) -> SuiteResult:
    points = conn.sample(samples, seed)
    checks = validate(conn, points, flat=flat, seed=seed)
    info = {"algebra": conn.h.name, "h_dim": conn.h.dim, "g_dim": conn.model.g.dim,
            "chart_dim": conn.model.chart_dim, "cartan": isinstance(conn, CartanConnection)}
    return SuiteResult(checks, info)


# -- chern-weil -------------------------------------------------------------------------------

def chern_weil_suite(f: MultilinearFunction, conn0: GeneralizedCartanConnection,
                     conn1: GeneralizedCartanConnection | None, samples: int, seed: int) -> SuiteResult:
    points = conn0.sample(samples, seed)
    scale = max(1.0, _max_abs(f.coeffs))
    checks = [Check("invariance", invariance_residual(conn0.h, f) / scale, 1e-8, "ad_invariance")]
    info = {"arity": f.arity, "form_degree": 2 * f.arity}
    for label, conn in (("", conn0), ("1", conn1)):
        if conn is None:
            continue
        fK = chern_weil_form(f, conn)
        checks.append(Check(f"closedness{label}", closedness_residual(fK, points), 1e-6, "chern_weil_closed"))
        info[f"max_fK{label}"] = float(f"{_max_abs(fK.components(points)):.6e}")
    if conn1 is not None:
        checks.append(Check("transgression", transgression_residual(f, conn0, conn1, points), 1e-5,
                            "transgression_exact"))
    return SuiteResult(checks, info)


# -- extension --------------------------------------------------------------------------------

def random_base_form(base_dim: int, degree: int, dim: int, seed: int, poly_degree: int = 2) -> FormField:
    rng = np.random.default_rng(seed)
    terms = {(k, I): Poly.random(base_dim, poly_degree, rng, 0.5)
             for k in range(dim) for I in combos(base_dim, degree)}
    return FormField.from_poly(terms, degree, base_dim, dim)


def extend_suite(conn: GeneralizedCartanConnection, ext: ExtendedModel, samples: int, seed: int) -> SuiteResult:
    inner = ext.inner.sample(samples, seed)
    outer = ext.outer.sample(samples, seed)
    h = ext.h
    ad = adjoint_rep(h)
    omega = q_flat_connection(conn, ext)
    checks = []
    back = q_flat_inverse(omega, ext)
    checks.append(Check("round_trip_connection", _max_abs(back.matrix(inner) - conn.matrix(inner)), 1e-8,
                        "q_flat_bijective"))
    again = q_flat_connection(back, ext)
    checks.append(Check("round_trip_principal", _max_abs(again.matrix(outer) - omega.matrix(outer)), 1e-8,
                        "q_flat_bijective"))
    checks.append(Check("reproduces_h_generators", reproduction_residual(omega, outer), 1e-7,
                        "principal_reproduction"))
    elements = ext.outer.sample_structure(8, seed)
    checks.append(Check("h_equivariance", equivariance_residual(omega, outer, elements), 1e-7,
                        "principal_equivariance"))
    checks.append(Check("quotient_well_defined",
                        quotient_residual(conn, ext, inner, ext.inner.sample_structure(3, seed + 1),
                                          ext.outer.sample_structure(3, seed + 2)), 1e-7, "quotient_well_defined"))
    beta = random_base_form(ext.base_dim, 1, h.dim, seed)
    psi = equivariant_form(ext.inner, beta, ext.inner.g_adjoint_generators())
    q_psi = q_flat_form(psi, ext, ad, inner=conn)
    checks.append(Check("round_trip_form",
                        _max_abs(q_flat_form_inverse(q_psi, ext).components(inner) - psi.components(inner)), 1e-8,
                        "q_flat_forms_bijective"))
    lhs = (exterior_derivative(q_psi) + rho_wedge(omega.kappa, q_psi, ad)).components(outer)
    d_psi = exterior_derivative(psi) + rho_wedge(conn.kappa, psi, ad)
    rhs = q_flat_form(d_psi, ext, ad, inner=conn).components(outer)
    scale = max(1.0, _max_abs(lhs), _max_abs(rhs))
    checks.append(Check("intertwining", _max_abs(lhs - rhs) / scale, 1e-5, "covariant_derivative_intertwining"))
    qK = q_flat_form(curvature(conn), ext, ad, inner=conn).components(outer)
    Kq = curvature(omega).components(outer)
    scale = max(1.0, _max_abs(qK), _max_abs(Kq))
    checks.append(Check("curvature_correspondence", _max_abs(qK - Kq) / scale, 1e-6, "principal_curvature"))
    rep = restrict_connection(omega, ext, inner)
    info = {"inner_algebra": ext.inner.g.name, "outer_algebra": h.name, "restriction_verdict": rep.verdict,
            "intersection_dims": list(rep.intersection_dims)}
    return SuiteResult(checks, info)


# -- developing ------------------------------------------------------------------------------------

def develop_suite(psi: GroupValuedMap, samples: int, seed: int, paths: int | list = 3, loops: int | list = 3,
                  steps: int = 1024) -> SuiteResult:
    """Develop δ^lψ along paths and loops and compare with ψ."""
    rep = psi.rep
    lo, hi = psi.box
    rng = np.random.default_rng(seed)
    kl, kr = delta_l(psi), delta_r(psi)
    points = sample_points(lo, hi, samples, seed)
    checks = [Check("mc_right_delta_l", mc_residual(kl, RIGHT, points), 1e-5, "maurer_cartan_right"),
              Check("mc_left_delta_r", mc_residual(kr, LEFT, points), 1e-5, "maurer_cartan_left")]
    path_list = paths if isinstance(paths, list) else [random_path(lo, hi, rng) for _ in range(paths)]
    loop_list = loops if isinstance(loops, list) else [random_loop(lo, hi, rng) for _ in range(loops)]
    worst_end, worst_match, endpoint = 0.0, 0.0, None
    for path in path_list:
        phi0 = expm(rep.matrix(rng.normal(size=rep.algebra.dim) * 0.3))
        dev = develop(kl, rep, path, phi0, steps)
        c0, c1 = path(0.0)[None], path(1.0)[None]
        ref = phi0 @ np.linalg.inv(psi(c0)[0]) @ psi(c1)[0]
        worst_end = max(worst_end, _max_abs(dev.endpoint - ref))
        worst_match = max(worst_match, delta_l_match_residual(dev, kl, rep, path))
        endpoint = dev.endpoint
    if path_list:
        checks.append(Check("endpoint_vs_known_map", worst_end, 1e-7, "developing_map"))
        checks.append(Check("delta_l_match", worst_match, 1e-6, "developing_map"))
    if loop_list:
        hol = max(holonomy_defect(kl, rep, loop, steps) for loop in loop_list)
        checks.append(Check("holonomy_defect", hol, 1e-6, "flat_holonomy"))
    info = {"algebra": rep.algebra.name, "paths": len(path_list), "loops": len(loop_list), "steps": steps}
    if endpoint is not None:
        info["last_endpoint"] = [[float(f"{v:.9e}") for v in row] for row in endpoint]
    series = {}
    if path_list:
        path = path_list[0]
        ref_dev = develop(kl, rep, path, None, 4 * steps).endpoint
        series["rk4_endpoint_error_vs_steps"] = [
            (float(N), _max_abs(develop(kl, rep, path, None, N, step_tol=math.inf).endpoint - ref_dev))
            for N in (8, 16, 32, 64)]
    return SuiteResult(checks, info, series)


# -- prolongation -----------------------------------------------------------------------------------

def prolong_suite(g: LinearLieAlgebra, k_max: int, strict: bool, seed: int) -> SuiteResult:
    table = prolong(g, k_max)
    checks = [Check("symmetry", table.symmetry_residual(), 1e-9, "prolongation_symmetric"),
              Check("membership", table.membership_residual(g), 1e-9, "prolongation_membership")]
    for k in range(1, k_max):
        checks.append(Check(f"iterated_prolongation_k{k}", iterated_prolongation_distance(table, k), 1e-9,
                            "prolongation_of_prolongation"))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        comp = torsion_complement(g, strict=False, seed=seed)
    checks.append(_count_check("complement_intersection", comp.intersection_dim, 0, "torsion_splitting"))
    total = g.n * math.comb(g.n, 2)
    checks.append(_count_check("complement_span", comp.image.shape[1] + comp.dim, total, "torsion_splitting"))
    checks.append(Check("complement_invariance", comp.leakage, INVARIANCE_TOL if strict else None,
                        "torsion_complement_invariant"))
    kernel = nullspace(delta_on_hom(g))[0].shape[1] if g.dim else 0
    checks.append(_count_check("kernel_delta_equals_g1", kernel, table.dim(1), "spencer_kernel"))
    split = spencer_splitting(g, table)
    checks.append(_count_check("splitting_consistent", 0 if split.consistent() else 1, 0, "spencer_splittings"))
    info = {"group": g.name, "n": g.n, "dim_g": g.dim, "table": table.to_dict(), "complement": comp.to_dict(),
            "splitting": split.to_dict()}
    return SuiteResult(checks, info)


# -- G-structures ----------------------------------------------------------------------------------

def gstructure_suite(struct: LocalGStructure, samples: int, seed: int, strict: bool) -> SuiteResult:
    g = struct.group
    xs = struct.sample_base(samples, seed)
    torsion = torsion_function(struct, xs)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        bundle = first_prolongation_bundle(struct, 2, strict=False)
    table = bundle.table
    checks = [Check("complement_invariance", bundle.complement.leakage, INVARIANCE_TOL if strict else None,
                    "torsion_complement_invariant"),
              Check("torsion_shift_law", bundle.shift_law_residual(xs[:4], seed=seed), 1e-6, "torsion_shift_law"),
              Check("normalization_solved", bundle.solve_residual(xs), 1e-8, "first_prolongation")]
    dims = bundle.coset_dims(xs[:4])
    worst = max(dims, key=lambda d: abs(d - table.dim(1)))
    checks.append(_count_check("coset_dim", worst, table.dim(1), "first_prolongation"))
    pts = bundle.model.sample(min(samples, 8), seed)
    elements = bundle.model.sample_structure(3, seed)
    checks.append(Check("theta1_g_equivariance", bundle.g_equivariance_residual(pts, elements), 1e-6,
                        "theta1_equivariant"))
    rng = np.random.default_rng(seed)
    checks.append(Check("theta1_g1_equivariance",
                        bundle.g1_equivariance_residual(pts, rng.uniform(-0.2, 0.2, size=(3, bundle.d1))),
                        1e-6, "theta1_equivariant"))
    info = {"group": g.name, "n": g.n, "flat": struct.is_flat, "verdict": table.verdict,
            "prolongation_dims": list(table.dims), "max_torsion": float(f"{_max_abs(torsion):.6e}"),
            "coset_dims": dims}
    if table.verdict == TYPE1:
        conn = type1_connection(struct, strict=False)
        points = conn.sample(min(samples, 16), seed)
        checks += _prefixed("type1", validate(conn, points, flat=struct.is_flat, seed=seed,
                                             tol=Tolerances(curvature_flat=1e-6)))
    elif table.verdict == TYPE2 and struct.is_flat:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = type2_connection(struct, strict=False)
        points = res.connection.sample(min(samples, 4), seed)
        checks += _prefixed("type2", validate(res.connection, points, flat=True, seed=seed,
                                             tol=Tolerances(curvature_flat=1e-5)))
        checks.append(Check("type2.complement_g_invariance", res.g_leakage, INVARIANCE_TOL if strict else None,
                            "torsion_complement_invariant"))
        checks.append(Check("type2.complement_g1_leakage", res.complement.leakage, None,
                            "g1_leakage_reported"))
        info["splitting"] = res.splitting.to_dict()
        info["type2_connection"] = {"values_in": "V + g + g^(1)", "structure_subalgebra": "g",
                                    "dims": [g.n, g.dim, res.bundle.d1]}
    return SuiteResult(checks, info)


# -- jets -------------------------------------------------------------------------------------------

def random_field(n: int, k: int, seed: int, scale: float = 0.5, max_degree: int = 2) -> JetVectorField:
    """Seeded vector field vanishing at 0 with terms of degree 1..max_degree."""
    rng = np.random.default_rng(seed)
    b = monomial_basis(n, k)
    c = np.zeros((b.size, n))
    mask = (b.degrees >= 1) & (b.degrees <= max_degree)
    c[mask] = rng.normal(scale=scale, size=(int(mask.sum()), n))
    return JetVectorField(n, k, c)


def bracket_table_distance(a: LieAlgebra, b: LieAlgebra, perm) -> float:
    P = np.eye(a.dim)[:, list(perm)]  # basis of a in terms of b: a_i = b_perm[i]
    moved = np.einsum("ka,aij->kij", P, a.structure)
    expected = np.einsum("kij,ia,jb->kab", b.structure, P, P)
    return _max_abs(moved - expected)


def jets_suite(g: LinearLieAlgebra, k: int, samples: int, seed: int, flow_order: int = 6,
               radius: float = 0.1) -> SuiteResult:
    n = g.n
    axioms = group_axiom_residuals(n, max(k, 2), seed)
    checks = [Check(f"group_{name}", val, 1e-12, "jet_group_axioms") for name, val in axioms.items()]
    X = random_field(n, flow_order, seed)
    pts = ball_points(n, radius, 20, seed)
    checks.append(Check("exp_vs_rk4_flow", flow_residual(X, pts), 1e-6, "jet_exp_flow"))
    fm = flat_model_connection(g, k)
    conn = fm.connection
    points = conn.sample(min(samples, 8), seed)
    checks.append(Check("flat_model_mc_right", mc_residual(conn.kappa, RIGHT, points), 1e-5, "flat_model_flat"))
    checks += _prefixed("flat_model", validate(conn, points, flat=True, seed=seed,
                                               tol=Tolerances(curvature_flat=1e-5)))
    info = {"group": g.name, "n": n, "k": k, "a_k_dim": fm.algebra.dim,
            "degrees": list(fm.algebra.degrees)}
    if k == 1 and g.dim:
        sd = semidirect(g.rep)
        perm = list(range(n, n + g.dim)) + list(range(n))  # a_1 = (V, g) vs semidirect = (g, V)
        perm_inv = [perm.index(i) for i in range(n + g.dim)]
        checks.append(Check("a1_matches_semidirect", bracket_table_distance(fm.algebra.algebra, sd, perm_inv),
                            1e-12, "a1_semidirect"))
    series = {"flow_residual_vs_radius": [(r, flow_residual(X, ball_points(n, r, 20, seed)))
                                          for r in (0.025, 0.05, 0.1, 0.2)]}
    return SuiteResult(checks, info, series)
