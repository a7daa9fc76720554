"""JSON run configurations: parsing with field-path diagnostics and object construction."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from .cartan import GeneralizedCartanConnection, LocalModel, make_principal_cartan, maurer_cartan
from .developing import Path
from .errors import CartanLabError, ConfigError
from .extension import ExtendedModel
from .forms import FormField
from .lie_core import (ALGEBRA_PRESETS, LieAlgebra, MatrixRep, MultilinearFunction, SubalgebraEmbedding,
                       identity_embedding, preset)
from .chern_weil import invariant_polynomial
from .matrix_group import GroupChart, GroupValuedMap
from .poly import Poly, PolyMatrix
from .prolongation import GROUP_ALIASES, LinearLieAlgebra, LocalGStructure

SUBCOMMANDS = ("check", "chern-weil", "extend", "develop", "prolong", "gstructure", "jets")
DEFAULT_SEED = 0x5EED


def parse_json(text: str, source: str = "<config>") -> Any:
    """json.loads with line:col diagnostics."""
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}", source) from None


def load_json_file(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})", path) from None
    return parse_json(text, path)


# -- field access with paths --------------------------------------------------------------------

class Node:
    """A JSON value with its dotted path, for error messages."""

    def __init__(self, value: Any, path: str):
        self.value = value
        self.path = path

    def fail(self, message: str) -> ConfigError:
        return ConfigError(f"{self.path}: {message}", self.path)

    def obj(self) -> "Node":
        if not isinstance(self.value, Mapping):
            raise self.fail("expected an object")
        return self

    def has(self, key: str) -> bool:
        return isinstance(self.value, Mapping) and key in self.value

    def __getitem__(self, key: str) -> "Node":
        self.obj()
        if key not in self.value:
            raise ConfigError(f"{self.path}.{key}: required field missing", f"{self.path}.{key}")
        return Node(self.value[key], f"{self.path}.{key}")

    def get(self, key: str, default: Any = None) -> "Node":
        self.obj()
        return Node(self.value.get(key, default), f"{self.path}.{key}")

    def items(self) -> list["Node"]:
        if not isinstance(self.value, list):
            raise self.fail("expected a list")
        return [Node(v, f"{self.path}[{i}]") for i, v in enumerate(self.value)]

    def int(self, lo: int | None = None, hi: int | None = None) -> int:
        v = self.value
        if isinstance(v, bool) or not isinstance(v, int):
            raise self.fail("expected an integer")
        if (lo is not None and v < lo) or (hi is not None and v > hi):
            raise self.fail(f"expected an integer in [{lo}, {hi}]")
        return v

    def number(self) -> float:
        v = self.value
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise self.fail("expected a number")
        return float(v)

    def bool(self) -> bool:
        if not isinstance(self.value, bool):
            raise self.fail("expected true or false")
        return self.value

    def str(self) -> str:
        if not isinstance(self.value, str):
            raise self.fail("expected a string")
        return self.value

    def array(self, ndim: int | None = None) -> np.ndarray:
        try:
            a = np.asarray(self.value, dtype=float)
        except (TypeError, ValueError):
            raise self.fail("expected a numeric array") from None
        if ndim is not None and a.ndim != ndim:
            raise self.fail(f"expected a {ndim}-dimensional numeric array")
        return a


def wrap(fn, node: Node):
    """Run a constructor and rethrow library errors as ConfigError at ``node``."""
    try:
        return fn()
    except ConfigError:
        raise
    except (CartanLabError, KeyError, ValueError, TypeError, IndexError) as exc:
        raise node.fail(str(exc) or type(exc).__name__) from None


# -- algebras, groups, polynomials --------------------------------------------------------------

def algebra_with_rep(node: Node) -> tuple[LieAlgebra, MatrixRep | None]:
    """A preset name (with its matrix representation) or an inline definition (no representation)."""
    if isinstance(node.value, str):
        name = node.value
        if name not in ALGEBRA_PRESETS:
            raise node.fail(f"unknown algebra preset {name!r}")
        return preset(name)
    node.obj()
    return wrap(lambda: LieAlgebra.from_definition(node.value, "inline"), node), None


def group_chart(node: Node) -> GroupChart:
    alg, rep = algebra_with_rep(node)
    if rep is None:
        raise node.fail("a group needs a preset name (matrix representation)")
    return GroupChart(alg, rep)


def subalgebra(node: Node, h: LieAlgebra) -> SubalgebraEmbedding:
    """Basis-index list or inclusion matrix (dim h × dim g)."""
    if node.value is None:
        return identity_embedding(h)
    v = node.value
    if isinstance(v, list) and all(isinstance(i, int) and not isinstance(i, bool) for i in v):
        if any(not 0 <= i < h.dim for i in v):
            raise node.fail(f"indices must lie in [0, {h.dim})")
        return wrap(lambda: SubalgebraEmbedding.from_indices(h, v), node)
    M = node.array(2)
    if M.shape[0] != h.dim:
        raise node.fail(f"inclusion matrix needs {h.dim} rows")
    return wrap(lambda: SubalgebraEmbedding.from_matrix(h, M), node)


def box(node: Node, dim: int) -> tuple[np.ndarray, np.ndarray] | None:
    if node.value is None:
        return None
    a = node.array(2)
    if a.shape != (2, dim):
        raise node.fail(f"expected [[lo...], [hi...]] with {dim} entries each")
    if np.any(a[0] >= a[1]):
        raise node.fail("lower corner must lie below the upper corner")
    return a[0], a[1]


def poly_matrix(node: Node, shape: tuple[int, int], nvars: int) -> PolyMatrix:
    """{"entries": ...}, {"constant": matrix}, {"random": {...}} or a sum via {"constant", "random"}."""
    node.obj()
    if node.has("entries"):
        pm = wrap(lambda: PolyMatrix.from_literal(node.value, nvars), node)
    else:
        pm = None
        if node.has("constant"):
            c = node["constant"].array(2)
            if c.shape != shape:
                raise node["constant"].fail(f"expected shape {list(shape)}")
            pm = PolyMatrix.constant(c, nvars)
        if node.has("random"):
            r = node["random"].obj()
            rng = np.random.default_rng(r["seed"].int(0))
            rnd = PolyMatrix.random(shape, nvars, r.get("degree", 2).int(0, 4), rng, r.get("scale", 0.5).number())
            pm = rnd if pm is None else pm + rnd
        if pm is None:
            raise node.fail("expected 'entries', 'constant' or 'random'")
    if pm.shape != shape:
        raise node.fail(f"expected a {shape[0]}x{shape[1]} polynomial matrix, got {pm.shape[0]}x{pm.shape[1]}")
    return pm


def linear_group(node: Node, n: int | None = None) -> LinearLieAlgebra:
    """Preset name, "trivial" (needs n), or a list of basis matrices."""
    v = node.value
    if isinstance(v, str):
        if v == "trivial":
            if n is None:
                raise node.fail("'trivial' needs the field 'n'")
            return LinearLieAlgebra.zero(n)
        if GROUP_ALIASES.get(v, v) not in ALGEBRA_PRESETS:
            raise node.fail(f"unknown group preset {v!r}")
        return wrap(lambda: LinearLieAlgebra.from_preset(v), node)
    basis = node.array(3)
    return wrap(lambda: LinearLieAlgebra(basis, "matrices"), node)


# -- connections --------------------------------------------------------------------------------

@dataclass(frozen=True)
class ConnectionSpec:
    model: LocalModel
    kappa_node: Node


def local_model(node: Node) -> LocalModel:
    node.obj()
    kind = node["kind"].str()
    h, hrep = algebra_with_rep(node["algebra"])
    if kind == "group":
        if hrep is None:
            raise node["algebra"].fail("the group model needs a preset algebra")
        emb = subalgebra(node.get("subalgebra"), h) if node.has("subalgebra") else None
        return LocalModel.group(GroupChart(h, hrep), emb)
    m = node["base_dim"].int(0, 6)
    bbox = box(node.get("base_box"), m)
    if kind == "principal":
        fiber = group_chart(node["group"])
        if not node.has("subalgebra"):
            raise ConfigError(f"{node.path}.subalgebra: required field missing", f"{node.path}.subalgebra")
        sub = node["subalgebra"]
        if isinstance(sub.value, list) and all(isinstance(i, int) for i in sub.value):
            inc = np.eye(h.dim)[:, sub.value]
        else:
            inc = sub.array(2)
        if inc.shape != (h.dim, fiber.dim):
            raise sub.fail(f"inclusion must be {h.dim}x{fiber.dim}")
        return wrap(lambda: LocalModel.principal(h, fiber, inc, m, bbox), node)
    if kind == "bare":
        emb = subalgebra(node["subalgebra"], h)
        lo, hi = bbox if bbox is not None else (-np.ones(m), np.ones(m))
        return wrap(lambda: LocalModel.bare(h, emb, (lo, hi)), node)
    raise node["kind"].fail("expected 'principal', 'bare' or 'group'")


def connection(node: Node, model: LocalModel | None = None) -> GeneralizedCartanConnection:
    node.obj()
    if model is None:
        model = local_model(node["model"])
    kn = node["kappa"].obj()
    if kn.has("preset"):
        if kn["preset"].str() != "maurer_cartan":
            raise kn["preset"].fail("only 'maurer_cartan' is available")
        if model.fiber is None or model.base_dim:
            raise kn.fail("the Maurer-Cartan form needs a group model")
        return wrap(lambda: maurer_cartan(model.fiber, model.structure), kn)
    if kn.has("generator"):
        if kn["generator"].str() != "make_principal_cartan":
            raise kn["generator"].fail("only 'make_principal_cartan' is available")
        m = model.base_dim
        A = poly_matrix(kn["A"], (model.h.dim, m), m) if kn.has("A") else None
        return wrap(lambda: make_principal_cartan(model, A), kn)
    if kn.has("terms"):
        form = wrap(lambda: FormField.from_literal(kn.value, model.chart_dim, model.h), kn)
        return wrap(lambda: GeneralizedCartanConnection(model, form), kn)
    raise kn.fail("expected 'preset', 'generator' or a form literal with 'terms'")


def polynomial(node: Node, h: LieAlgebra) -> MultilinearFunction:
    node.obj()
    kind = node["kind"].str()
    if kind == "trace_power":
        alg, rep = algebra_with_rep(node["rep"])
        if rep is None or alg.dim != h.dim:
            raise node["rep"].fail("representation preset must be of the connection algebra")
        return wrap(lambda: invariant_polynomial(h, kind, node.get("power", 2).int(1, 3), rep), node)
    if kind == "killing":
        return invariant_polynomial(h, kind)
    if kind == "tensor":
        c = node["coeffs"].array()
        if c.ndim < 1 or any(s != h.dim for s in c.shape):
            raise node["coeffs"].fail(f"expected a symmetric tensor with every axis of length {h.dim}")
        return wrap(lambda: invariant_polynomial(h, kind, coeffs=c), node)
    raise node["kind"].fail("expected 'trace_power', 'killing' or 'tensor'")


# -- per-subcommand builders ------------------------------------------------------------------------

def build_check(cfg: Node) -> dict:
    return {"connection": connection(cfg), "flat": cfg.get("flat", False).bool()}


def build_chern_weil(cfg: Node) -> dict:
    c0 = connection(cfg["connection"])
    c1 = connection(cfg["connection1"], c0.model) if cfg.has("connection1") else None
    return {"f": polynomial(cfg["polynomial"], c0.h), "conn0": c0, "conn1": c1}


def build_extend(cfg: Node) -> dict:
    cn = cfg["connection"].obj()
    mn = cn["model"].obj()
    if mn["kind"].str() != "principal":
        raise mn["kind"].fail("extension needs a principal model")
    outer = group_chart(cfg["outer_group"])
    inner = group_chart(mn["group"])
    h, _ = algebra_with_rep(mn["algebra"])
    if not h.same_as(outer.algebra):
        raise mn["algebra"].fail("the connection algebra must be the Lie algebra of the outer group")
    m = mn["base_dim"].int(1, 4)
    ext = wrap(lambda: ExtendedModel.build(outer, inner, m, box(mn.get("base_box"), m)), cfg)
    return {"connection": connection(cn, ext.inner), "ext": ext}


def _poly(node: Node, nvars: int) -> Poly:
    if isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return Poly.const(nvars, float(node.value))
    node.obj()
    return wrap(lambda: Poly.from_literal(node.value, nvars), node)


def build_develop(cfg: Node) -> dict:
    mp = cfg["map"].obj()
    alg, rep = algebra_with_rep(mp["group"])
    if rep is None:
        raise mp["group"].fail("a group needs a preset name")
    m = mp.get("base_dim", 2).int(1, 4)
    bbox = box(mp.get("box"), m) or (-np.ones(m), np.ones(m))
    if mp.has("factors"):
        factors = []
        for fnode in mp["factors"].items():
            items = fnode.items()
            if len(items) != alg.dim:
                raise fnode.fail(f"each factor needs {alg.dim} polynomials")
            factors.append([_poly(p, m) for p in items])
    else:
        r = mp["random"].obj()
        rng = np.random.default_rng(r["seed"].int(0))
        deg, scale = r.get("degree", 2).int(0, 4), r.get("scale", 0.5).number()
        factors = [[Poly.random(m, deg, rng, scale) for _ in range(alg.dim)]
                   for _ in range(r.get("factors", 2).int(1, 4))]
    if not factors:
        raise mp.fail("at least one factor is needed")
    psi = GroupValuedMap.exp_product(rep, factors, bbox)

    def paths(key: str, default: int):
        node = cfg.get(key, default)
        if isinstance(node.value, int) and not isinstance(node.value, bool):
            return node.int(0, 64)
        out = []
        for p in node.items():
            path = wrap(lambda: Path.from_literal(p.obj().value), p)
            if path.dim != m:
                raise p.fail(f"control points must have {m} coordinates")
            if key == "loops" and not path.closed:
                raise p.fail("a loop must end where it starts")
            out.append(path)
        return out

    steps = cfg.get("steps", 1024).int(2, 1 << 16)
    if steps % 2:
        raise cfg["steps"].fail("the step count must be even")
    return {"psi": psi, "paths": paths("paths", 3), "loops": paths("loops", 3), "steps": steps}


def build_prolong(cfg: Node) -> dict:
    g = linear_group(cfg["group"], cfg.get("n").int(1, 4) if cfg.has("n") else None)
    return {"g": g, "k_max": cfg.get("k_max", 2).int(1, 4),
            "strict": cfg.get("strict_invariance", False).bool()}


def build_gstructure(cfg: Node) -> dict:
    g = linear_group(cfg["group"], cfg.get("n").int(1, 4) if cfg.has("n") else None)
    n = g.n
    bbox = box(cfg.get("base_box"), n)
    frame = None
    if cfg.has("frame") and cfg["frame"].value is not None:
        frame = poly_matrix(cfg["frame"], (n, n), n)
    struct = wrap(lambda: LocalGStructure(g, frame, bbox), cfg)
    wrap(lambda: struct.check_frame(struct.sample_base(16)), cfg.get("frame"))
    return {"struct": struct, "strict": cfg.get("strict_invariance", False).bool()}


def build_jets(cfg: Node) -> dict:
    g = linear_group(cfg["group"], cfg.get("n").int(1, 3) if cfg.has("n") else None)
    return {"g": g, "k": cfg.get("k", 1).int(1, 3)}


BUILDERS = {"check": build_check, "chern-weil": build_chern_weil, "extend": build_extend,
            "develop": build_develop, "prolong": build_prolong, "gstructure": build_gstructure,
            "jets": build_jets}


def build(subcommand: str, config: Any, path: str = "config") -> dict:
    """Validate a config dict and construct the objects its suite needs."""
    if subcommand not in BUILDERS:
        raise ConfigError(f"unknown subcommand {subcommand!r}", "subcommand")
    return BUILDERS[subcommand](Node(config, path).obj())
