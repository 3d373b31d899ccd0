"""Recurrence classification of scenes and of computed geometries."""

from __future__ import annotations

import numpy as np

from ..curvature import CurvatureField
from ..metric import EvalPoint, InadmissiblePointError, MetricSpec
from .fit import NONZERO_FORM_TOL, RESIDUAL_EPS, fit_linear_forms, form_is_nonzero
from .kinds import KINDS, RecurrenceKind
from .scenes import SyntheticScene

DEFAULT_RESIDUAL_TOL = 1e-9
FLAT_TOL = 1e-12
HOMOGENEITY_LAMBDAS = (0.5, 2.0)


def geometric_snapshot(spec: MetricSpec, p: EvalPoint) -> SyntheticScene:
    """Pipeline curvature at a point packaged like a scene.

    A and B are the least-squares forms of the hyper-generalized model.
    """
    cf = CurvatureField(spec, p, 1)
    R = cf.R.value
    dR = cf.nabla("R").value
    dRic = cf.nabla("Ric").value
    dr = cf.nabla("r").value
    n = spec.n
    snap = SyntheticScene(n, -1, "geometric", "computed", (), cf.g.value, R, dR, dRic, dr, np.zeros(n), np.zeros(n))
    if n >= 3:
        fit = fit_linear_forms(dR, [snap.R, snap.gRic])
        snap.A = fit.form(0) if fit.form(0) is not None else np.zeros(n)
        snap.B = fit.form(1) if fit.form(1) is not None else np.zeros(n)
    snap.notes.append(f"x={list(p.x)} y={list(p.y)}")
    return snap


def _fit_kind(snap: SyntheticScene, kind: RecurrenceKind):
    D = snap.derivative(kind.derivative)
    basis = [snap.tensor(t) for t in kind.basis]
    fit = fit_linear_forms(D, basis)
    if not basis:
        # nabla T = 0 has nothing to fit; measure the derivative against T itself
        fit.residual = float(np.linalg.norm(D) / max(np.linalg.norm(snap.tensor(kind.derivative)), RESIDUAL_EPS))
    return D, basis, fit


def _scale(D, basis) -> float:
    ref = np.linalg.norm(basis[0]) if basis else 0.0
    return 1.0 + (np.linalg.norm(D) / ref if ref > 0 else 0.0)


def classify_snapshots(snaps: list, tolerances: dict | None = None) -> dict:
    tol = dict(tolerances or {})
    res_tol = float(tol.get("residual", DEFAULT_RESIDUAL_TOL))
    form_tol = float(tol.get("nonzero_form", NONZERO_FORM_TOL))
    if not snaps:
        return {"status": "no admissible samples", "kinds": {}}
    n = snaps[0].n
    if n < 3:
        raise ValueError("classification needs n >= 3")
    flat = all(np.abs(s.R).max() < FLAT_TOL for s in snaps)
    table = {}
    for tag, kind in KINDS.items():
        if flat:
            table[tag] = {"status": "vacuous", "member": None, "reason": "vacuous: nonzero h-curvature required"}
            continue
        residuals, forms, flags = [], {"A": [], "B": []}, set()
        nonzero_any = True
        for snap in snaps:
            D, basis, fit = _fit_kind(snap, kind)
            residuals.append(fit.residual)
            scale = _scale(D, basis)
            present = []
            for k, name in enumerate(("A", "B")[: kind.nforms]):
                f = fit.form(k)
                forms[name].append(None if f is None else [float(v) for v in f])
                if f is None:
                    flags.add(f"indeterminate {name}")
                    present.append(False)
                elif not form_is_nonzero(f, snap.g, scale, form_tol):
                    flags.add(f"degenerate {name}")
                    present.append(False)
                else:
                    present.append(True)
            if kind.nforms and not any(present):
                nonzero_any = False
        fits = all(r < res_tol for r in residuals)
        member = bool(fits and nonzero_any)
        entry = {
            "status": "member" if member else "not member",
            "member": member,
            "residuals": residuals,
            "max_residual": max(residuals),
            "flags": sorted(flags),
            "formula": kind.formula,
        }
        for name in ("A", "B")[: kind.nforms]:
            entry[name] = forms[name]
        table[tag] = entry
    return {"status": "vacuous" if flat else "ok", "kinds": table, "implications": _implications(snaps, table)}


def _implications(snaps, table) -> list:
    """Relations between classes predicted by the recurrence identities, as observed."""
    if not table or table.get("hyper_generalized", {}).get("status") == "vacuous":
        return []
    out = []
    hgf = table["hyper_generalized"]
    grr = table["generalized_ricci_recurrent"]
    if hgf["member"]:
        errs_a, errs_b = [], []
        for k, snap in enumerate(snaps):
            n = snap.n
            A, B = hgf["A"][k], hgf["B"][k]
            if A is None or B is None or grr["A"][k] is None or grr["B"][k] is None:
                continue
            A, B = np.array(A), np.array(B)
            errs_a.append(float(np.abs(np.array(grr["A"][k]) - (A + (n - 2) * B)).max()))
            errs_b.append(float(np.abs(np.array(grr["B"][k]) - snap.r * B).max()))
        out.append({
            "from": "hyper_generalized",
            "to": "generalized_ricci_recurrent",
            "observed": bool(grr["member"]),
            "A1_error": max(errs_a) if errs_a else None,
            "B1_error": max(errs_b) if errs_b else None,
        })
        out.append({"from": "hyper_generalized", "to": "generalized_conharmonic", "observed": bool(table["generalized_conharmonic"]["member"])})
    if table["recurrent"]["member"]:
        out.append({"from": "recurrent", "to": "generalized_recurrent", "observed": bool(table["generalized_recurrent"]["member"])})
    if table["conharmonic_recurrent"]["member"]:
        out.append({"from": "conharmonic_recurrent", "to": "generalized_conharmonic", "observed": bool(table["generalized_conharmonic"]["member"])})
    if table["ricci_recurrent"]["member"]:
        out.append({"from": "ricci_recurrent", "to": "generalized_ricci_recurrent", "observed": bool(grr["member"])})
    return out


def _homogeneity(spec, samples, tolerances) -> dict:
    worst = 0.0
    for p in samples:
        base = classify_snapshots([geometric_snapshot(spec, p)], tolerances)["kinds"]
        for lam in HOMOGENEITY_LAMBDAS:
            scaled = classify_snapshots([geometric_snapshot(spec, p.scaled(lam))], tolerances)["kinds"]
            for tag, entry in base.items():
                for name in ("A", "B"):
                    a, b = entry.get(name, [None])[0], scaled[tag].get(name, [None])[0]
                    if a is not None and b is not None:
                        worst = max(worst, float(np.abs(np.array(a) - np.array(b)).max()))
    return {"lambdas": list(HOMOGENEITY_LAMBDAS), "max_form_deviation": worst, "degree_zero": worst < 1e-6}


def classify(source, samples=None, tolerances: dict | None = None, homogeneity: bool = False) -> dict:
    """Recurrence table for a scene or for a metric at sample points."""
    if isinstance(source, SyntheticScene):
        report = classify_snapshots([source], tolerances)
        report["samples"] = 1
        return report
    if not isinstance(source, MetricSpec):
        raise TypeError("classify expects a SyntheticScene or a MetricSpec")
    if source.n < 3:
        raise ValueError("classification needs n >= 3")
    snaps, rejected, used = [], [], []
    for k, p in enumerate(samples or []):
        try:
            snaps.append(geometric_snapshot(source, p))
            used.append(p)
        except (InadmissiblePointError, ArithmeticError) as err:
            rejected.append({"sample": k, "reason": str(err)})
    report = classify_snapshots(snaps, tolerances)
    report["samples"] = len(snaps)
    report["rejected"] = rejected
    if homogeneity and used and report["status"] == "ok":
        report["homogeneity"] = _homogeneity(source, used, tolerances)
    return report
