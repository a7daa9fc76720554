"""Deterministic report assembly and rendering (text, JSON, CSV series)."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .checks import FAIL, PASS, WARN, Check


def clean(value):
    """JSON-ready copy with floats rounded to 7 significant digits and sorted-key friendly types."""
    if isinstance(value, dict):
        return {str(k): clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return clean(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        x = float(value)
        if not math.isfinite(x):
            return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
        return float(f"{x:.6e}")
    return value


@dataclass
class Report:
    subcommand: str
    source: str
    seed: int
    samples: int
    tol_scale: float
    strict: bool
    checks: list[Check]
    info: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)

    def counts(self) -> dict[str, int]:
        out = {PASS: 0, WARN: 0, FAIL: 0}
        for c in self.checks:
            out[c.verdict] += 1
        return out

    @property
    def status(self) -> str:
        counts = self.counts()
        if counts[FAIL] or (self.strict and counts[WARN]):
            return FAIL
        return WARN if counts[WARN] else PASS

    @property
    def exit_code(self) -> int:
        return 1 if self.status == FAIL else 0

    def to_dict(self) -> dict:
        return clean({"subcommand": self.subcommand, "source": self.source, "seed": f"0x{self.seed:X}",
                      "samples": self.samples, "tol_scale": self.tol_scale, "strict": self.strict,
                      "checks": [c.to_dict() for c in self.checks], "info": self.info,
                      "summary": {**{k.lower(): v for k, v in self.counts().items()}, "status": self.status}})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_text(self) -> str:
        lines = [f"cartanlab {self.subcommand}  source={self.source}  seed=0x{self.seed:X}  "
                 f"samples={self.samples}  tol_scale={self.tol_scale:g}{'  strict' if self.strict else ''}", ""]
        width = max((len(c.name) for c in self.checks), default=4)
        for c in self.checks:
            tol = "info" if c.tolerance is None else f"{c.tolerance:.1e}"
            lines.append(f"  {c.verdict:<4}  {c.name:<{width}}  residual={c.residual:.3e}  tol={tol:<7}  [{c.anchor}]"
                         + (f"  {c.detail}" if c.detail else ""))
        if self.info:
            lines.append("")
            for key, val in sorted(clean(self.info).items()):
                lines.append(f"  {key}: {json.dumps(val, sort_keys=True)}")
        counts = self.counts()
        lines += ["", f"{self.status}: {counts[PASS]} pass, {counts[WARN]} warn, {counts[FAIL]} fail"]
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["series", "parameter", "residual"])
        for name in sorted(self.series):
            for param, res in self.series[name]:
                writer.writerow([name, repr(float(param)), f"{float(res):.6e}"])
        return buf.getvalue()
