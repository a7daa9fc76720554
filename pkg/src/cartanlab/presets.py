"""Preset registry: named run configurations per subcommand, plus user presets from disk."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from .config import SUBCOMMANDS, load_json_file
from .errors import ConfigError
from .lie_core import ALGEBRA_PRESETS, preset

PRESET_DIR_ENV = "CARTANLAB_PRESET_DIR"


@dataclass(frozen=True)
class Preset:
    name: str
    subcommand: str
    description: str
    config: dict

    def to_json(self) -> str:
        return json.dumps({"name": self.name, "subcommand": self.subcommand, "description": self.description,
                           "config": self.config}, sort_keys=True)

    @classmethod
    def from_dict(cls, d, source: str = "<preset>") -> "Preset":
        if not isinstance(d, dict):
            raise ConfigError(f"{source}: a preset must be an object", source)
        for key in ("name", "subcommand", "config"):
            if key not in d:
                raise ConfigError(f"{source}.{key}: required field missing", f"{source}.{key}")
        if d["subcommand"] not in SUBCOMMANDS:
            raise ConfigError(f"{source}.subcommand: unknown subcommand {d['subcommand']!r}", f"{source}.subcommand")
        if not isinstance(d["name"], str) or not d["name"]:
            raise ConfigError(f"{source}.name: expected a non-empty string", f"{source}.name")
        return cls(d["name"], d["subcommand"], str(d.get("description", "")), d["config"])


def _mc(algebra: str, subalgebra=None, description: str = "") -> Preset:
    model = {"kind": "group", "algebra": algebra}
    if subalgebra is not None:
        model["subalgebra"] = subalgebra
    name = f"{algebra}-{'mc' if subalgebra is None else 'mc-sub'}"
    return Preset(name, "check", description or f"left Maurer-Cartan form of {algebra}",
                  {"model": model, "kappa": {"preset": "maurer_cartan"}, "flat": True})


def _principal(algebra: str, group: str, sub, base_dim: int, seed: int, scale: float = 0.5, constant=None) -> dict:
    A = {"random": {"seed": seed, "degree": 2, "scale": scale}}
    if constant is not None:
        A["constant"] = constant
    return {"model": {"kind": "principal", "algebra": algebra, "group": group, "subalgebra": sub,
                      "base_dim": base_dim},
            "kappa": {"generator": "make_principal_cartan", "A": A}}


BUILTIN: tuple[Preset, ...] = (
    _mc("so2"),
    _mc("so3"),
    _mc("sl2"),
    _mc("heis3"),
    Preset("so3-mc-so2", "check", "Maurer-Cartan form of SO(3) as a Cartan connection of type so(3)/so(2)",
           {"model": {"kind": "group", "algebra": "so3", "subalgebra": [2]}, "kappa": {"preset": "maurer_cartan"},
            "flat": True}),
    Preset("e2-curved", "check", "random polynomial Cartan connection of type e(2)/so(2) over a 2-dimensional base",
           _principal("e2", "so2", [0], 2, 11, constant=[[0, 0], [1, 0], [0, 1]])),
    Preset("sl2-borel", "check", "random generalized Cartan connection of type sl(2)/borel over a line",
           _principal("sl2", "borel", [0, 1], 1, 1, scale=1.0)),
    Preset("e2-trace", "chern-weil", "quadratic invariant on e(2) evaluated on two random e(2)/so(2) connections",
           {"connection": _principal("e2", "so2", [0], 5, 21), "connection1": _principal("e2", "so2", [0], 5, 22),
            "polynomial": {"kind": "tensor", "coeffs": [[1, 0, 0], [0, 0, 0], [0, 0, 0]]}}),
    Preset("sl2-killing", "chern-weil", "Killing form on two random sl(2)/borel connections",
           {"connection": _principal("sl2", "borel", [0, 1], 5, 31),
            "connection1": _principal("sl2", "borel", [0, 1], 5, 32),
            "polynomial": {"kind": "killing"}}),
    Preset("so2-in-sl2", "extend", "random e(2)-shaped connection on U x SO(2) extended to U x SL(2)",
           {"connection": _principal("sl2", "so2", [[0], [-1], [1]], 2, 41,
                                     constant=[[1, 0], [0, 1], [0, 1]]),
            "outer_group": "sl2"}),
    Preset("so3-exp", "develop", "developing the left log-derivative of a product of exponentials in SO(3)",
           {"map": {"group": "so3", "base_dim": 2, "random": {"seed": 51, "factors": 2, "degree": 2, "scale": 0.5}},
            "paths": 3, "loops": 3}),
    Preset("sl2-exp", "develop", "developing the left log-derivative of a product of exponentials in SL(2)",
           {"map": {"group": "sl2", "base_dim": 2, "random": {"seed": 52, "factors": 2, "degree": 2, "scale": 0.5}},
            "paths": 3, "loops": 3}),
    Preset("heis3-exp", "develop", "developing the left log-derivative of a product of exponentials in Heis(3)",
           {"map": {"group": "heis3", "base_dim": 2, "random": {"seed": 53, "factors": 2, "degree": 2,
                                                                "scale": 0.5}},
            "paths": 3, "loops": 3}),
    *(Preset(g, "prolong", f"prolongations of {g}", {"group": g, "k_max": 2, "strict_invariance": False})
      for g in ("so2", "so3", "gl2", "co2", "co3", "sl2")),
    Preset("so2-flat", "gstructure", "standard flat SO(2)-structure on R^2", {"group": "so2"}),
    Preset("so2-curved", "gstructure", "SO(2)-structure with a polynomial frame perturbation",
           {"group": "so2", "frame": {"constant": [[1, 0], [0, 1]],
                                      "random": {"seed": 61, "degree": 2, "scale": 0.1}}}),
    Preset("gl2-curved", "gstructure", "GL(2)-structure with frame diag(1 + x2, 1)",
           {"group": "gl2", "frame": {"entries": [[{"00": 1, "01": 1}, {}], [{}, {"00": 1}]]},
            "base_box": [[-0.5, -0.5], [0.5, 0.5]]}),
    Preset("co3-flat", "gstructure", "standard flat CO(3)-structure on R^3 (type 2)", {"group": "co3"}),
    Preset("so2-k1", "jets", "flat model of SO(2) at jet order 1", {"group": "so2", "k": 1}),
    Preset("so3-k1", "jets", "flat model of SO(3) at jet order 1", {"group": "so3", "k": 1}),
    Preset("co3-k2", "jets", "flat model of CO(3) at jet order 2", {"group": "co3", "k": 2}),
    Preset("trivial-n2-k2", "jets", "trivial group on R^2 at jet order 2", {"group": "trivial", "n": 2, "k": 2}),
)


def user_presets() -> list[Preset]:
    """Presets from *.json files in $CARTANLAB_PRESET_DIR, sorted by file name."""
    root = os.environ.get(PRESET_DIR_ENV)
    if not root:
        return []
    base = Path(root)
    if not base.is_dir():
        raise ConfigError(f"{PRESET_DIR_ENV}={root}: not a directory", PRESET_DIR_ENV)
    out = []
    for path in sorted(base.glob("*.json")):
        out.append(Preset.from_dict(load_json_file(str(path)), str(path)))
    return out


def all_presets() -> list[Preset]:
    """Built-in presets followed by user presets; a user preset replaces a built-in of the same name."""
    table = {p.name: p for p in BUILTIN}
    for p in user_presets():
        table[p.name] = p
    return list(table.values())


def find(name: str, subcommand: str) -> Preset:
    for p in all_presets():
        if p.name == name:
            if p.subcommand != subcommand:
                raise ConfigError(f"preset {name!r} belongs to subcommand {p.subcommand!r}", "--preset")
            return p
    known = sorted(p.name for p in all_presets() if p.subcommand == subcommand)
    raise ConfigError(f"unknown preset {name!r} for {subcommand}; known: {', '.join(known)}", "--preset")


def catalog() -> dict:
    """Stable-ordered catalog of algebra presets and run presets."""
    algebras = []
    for name in sorted(ALGEBRA_PRESETS):
        alg, rep = preset(name)
        algebras.append({"name": name, "dim": alg.dim, "matrix_size": rep.rep_dim, "group": rep.relation or ""})
    runs = {sc: [{"name": p.name, "description": p.description}
                 for p in sorted(all_presets(), key=lambda q: q.name) if p.subcommand == sc]
            for sc in SUBCOMMANDS}
    return {"algebras": algebras, "presets": runs}
