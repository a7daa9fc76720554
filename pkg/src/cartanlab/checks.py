"""Named residual checks with PASS/WARN/FAIL verdicts."""

from __future__ import annotations

import math
from dataclasses import dataclass

PASS, WARN, FAIL = "PASS", "WARN", "FAIL"


@dataclass(frozen=True)
class Check:
    """A residual compared against a tolerance.

    The WARN band is [tolerance, 10 * tolerance).  A tolerance of None marks
    an informational entry that always passes.
    """

    name: str
    residual: float
    tolerance: float | None
    anchor: str = ""
    detail: str = ""

    @property
    def verdict(self) -> str:
        if self.tolerance is None:
            return PASS
        r = self.residual
        if not math.isfinite(r):
            return FAIL
        if r < self.tolerance:
            return PASS
        if r < 10.0 * self.tolerance:
            return WARN
        return FAIL

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def scaled(self, factor: float) -> "Check":
        tol = None if self.tolerance is None else self.tolerance * factor
        return Check(self.name, self.residual, tol, self.anchor, self.detail)

    def to_dict(self) -> dict:
        return {"name": self.name, "anchor": self.anchor, "residual": _clean(self.residual),
                "tolerance": self.tolerance, "verdict": self.verdict, "detail": self.detail}


def _clean(x: float) -> float | str:
    if math.isfinite(x):
        return float(f"{x:.6e}")
    return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
