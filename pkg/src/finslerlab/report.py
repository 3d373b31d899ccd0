"""Check reports whose pass/fail decisions can be recomputed from their numbers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

DEFAULT_HYPOTHESIS_TOL = 1e-9
DEFAULT_CONCLUSION_TOL = 1e-7
NONZERO_TOL = 1e-6

PASS, FAIL, NOT_APPLICABLE = "pass", "fail", "not-applicable"


@dataclass
class Entry:
    """One measured quantity with its requirement.

    ``require`` is ``"zero"`` (value must be below tol) or ``"nonzero"``
    (value must exceed tol).
    """

    name: str
    value: float
    tol: float
    require: str = "zero"

    def holds(self) -> bool:
        v = self.value
        if v is None or (isinstance(v, float) and math.isnan(v)):
            return False
        return v < self.tol if self.require == "zero" else v > self.tol

    def to_json(self) -> dict:
        v = self.value
        if v is not None and not math.isfinite(v):
            v = str(v)
        return {"name": self.name, "value": v, "tol": self.tol, "require": self.require, "holds": self.holds()}

    @staticmethod
    def recompute(d: dict) -> bool:
        v = d["value"]
        v = float(v) if v is not None else float("nan")
        return Entry(d["name"], v, d["tol"], d["require"]).holds()


@dataclass
class CheckReport:
    check_id: str
    hypotheses: list = field(default_factory=list)
    conclusions: list = field(default_factory=list)
    info: dict = field(default_factory=dict)
    reason: str = ""

    @property
    def status(self) -> str:
        if self.reason or not all(e.holds() for e in self.hypotheses):
            return NOT_APPLICABLE
        return PASS if all(e.holds() for e in self.conclusions) else FAIL

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def hypothesis_residual(self) -> float:
        vals = [e.value for e in self.hypotheses if e.require == "zero"]
        return float(max(vals)) if vals else 0.0

    def conclusion_residual(self) -> float:
        vals = [e.value for e in self.conclusions if e.require == "zero"]
        return float(max(vals)) if vals else 0.0

    def to_json(self) -> dict:
        return {
            "check_id": self.check_id,
            "status": self.status,
            "hypothesis_residual": self.hypothesis_residual(),
            "conclusion_residual": self.conclusion_residual(),
            "hypotheses": [e.to_json() for e in self.hypotheses],
            "conclusions": [e.to_json() for e in self.conclusions],
            "info": self.info,
            "reason": self.reason or self._failed_hypotheses(),
        }

    def _failed_hypotheses(self) -> str:
        failed = [e.name for e in self.hypotheses if not e.holds()]
        return f"hypotheses not satisfied: {', '.join(failed)}" if failed else ""

    @staticmethod
    def recompute_status(d: dict) -> str:
        """Status implied by the stored entries alone."""
        if d.get("reason") or not all(Entry.recompute(e) for e in d["hypotheses"]):
            return NOT_APPLICABLE
        return PASS if all(Entry.recompute(e) for e in d["conclusions"]) else FAIL


class Tolerances:
    """Default hypothesis/conclusion tolerances plus per-entry overrides."""

    def __init__(self, overrides: dict | None = None):
        overrides = dict(overrides or {})
        for k, v in overrides.items():
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0:
                raise ValueError(f"tolerance {k!r} must be a positive number")
        self.hypothesis = float(overrides.pop("hypothesis", DEFAULT_HYPOTHESIS_TOL))
        self.conclusion = float(overrides.pop("conclusion", DEFAULT_CONCLUSION_TOL))
        self.nonzero = float(overrides.pop("nonzero", NONZERO_TOL))
        self.entries = {k: float(v) for k, v in overrides.items()}

    def hyp(self, name: str, value: float, tol: float | None = None) -> Entry:
        return Entry(name, float(value), self.entries.get(name, tol if tol is not None else self.hypothesis))

    def hyp_nonzero(self, name: str, value: float) -> Entry:
        return Entry(name, float(value), self.entries.get(name, self.nonzero), "nonzero")

    def con(self, name: str, value: float, tol: float | None = None) -> Entry:
        return Entry(name, float(value), self.entries.get(name, tol if tol is not None else self.conclusion))

    def con_nonzero(self, name: str, value: float, tol: float | None = None) -> Entry:
        return Entry(name, float(value), self.entries.get(name, tol if tol is not None else self.nonzero), "nonzero")
