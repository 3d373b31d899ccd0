"""Recurrence classification, synthetic scenes and theorem checks."""

from .classify import classify
from .fit import LinearFit, fit_linear_forms
from .kinds import KIND_TAGS, KINDS, RecurrenceKind, get_kind
from .scenes import InfeasibleScene, SyntheticScene, class_basis, planted_forms, synth_scene
from .theorems import THEOREM_CHECKS, hypothesis_scene, verify_theorem

__all__ = [
    "KINDS", "KIND_TAGS", "InfeasibleScene", "LinearFit", "RecurrenceKind", "SyntheticScene", "THEOREM_CHECKS",
    "class_basis", "classify", "planted_forms", "fit_linear_forms", "get_kind", "hypothesis_scene", "synth_scene", "verify_theorem",
]
