"""Consequences of hyper-generalized and conharmonic recurrence, checked on scenes.

Each check measures its hypotheses first; when any fails the check is
reported as not applicable. Forms are the scene's planted recurrence forms.
"""

from __future__ import annotations

import numpy as np

from .. import tensors as tz
from ..report import CheckReport, Tolerances
from .fit import fit_linear_forms
from .scenes import SyntheticScene, _kn_slots, synth_scene

THEOREM_CHECKS = (
    "T2.4a", "T2.4b", "T2.4c",
    "T2.5a", "T2.5b",
    "T2.6a", "T2.6b", "T2.6c",
    "T2.7a", "T2.7b", "T2.7c",
    "T3.3a", "T3.3b",
    "T3.4a", "T3.4b",
    "T3.5a", "T3.5b", "T3.5c",
)

# threshold on the smallest singular value of the dbar kernel map, relative to |H|
KERNEL_TOL = 1e-8


def _mx(a) -> float:
    a = np.asarray(a, dtype=float)
    return float(np.abs(a).max()) if a.size else 0.0


def _rel(a, ref) -> float:
    return _mx(a) / max(_mx(ref), 1e-14)


def _hgf_residual(s: SyntheticScene) -> float:
    model = np.multiply.outer(s.A, s.R) + np.multiply.outer(s.B, s.gRic)
    return _rel(s.dR - model, s.dR)


def _gcf_residual(s: SyntheticScene) -> float:
    model = np.multiply.outer(s.A, s.CH) + np.multiply.outer(s.B, s.G)
    return _rel(s.dCH - model, s.dCH)


def _compose_ric_o(form, s: SyntheticScene) -> np.ndarray:
    """(form o Ric_o)(X) = form(Ric_o X)."""
    return np.einsum("i,ix->x", form, tz.ricci_operator(s.Ric_sym, s.ginv))


def _common_hgf(s, tol: Tolerances, bianchi=False, r_nonzero=False, r_const=False, r_zero=False) -> list:
    hyp = [tol.hyp("hgf_model", _hgf_residual(s))]
    if bianchi:
        hyp.append(tol.hyp("second_bianchi", s.bianchi_residual()))
    if r_nonzero:
        hyp.append(tol.hyp_nonzero("abs_r", abs(s.r)))
    if r_const:
        hyp.append(tol.hyp("abs_dr", _mx(s.dr)))
    if r_zero:
        hyp.append(tol.hyp("abs_r", abs(s.r)))
    return hyp


def _fit_entries(prefix, fit, expected, tol):
    out = [tol.con(f"{prefix}_fit_residual", fit.residual)]
    for k, exp in enumerate(expected):
        got = fit.form(k)
        out.append(tol.con(f"{prefix}_form{k + 1}_error", np.inf if got is None else _mx(got - exp)))
    return out


# ---------------------------------------------------------------------------
# Contraction results
# ---------------------------------------------------------------------------


def _t24a(s, tol):
    n = s.n
    hyp = _common_hgf(s, tol, r_nonzero=True)
    fit = fit_linear_forms(s.derivative("Ric"), [s.Ric_sym, s.g])
    A1, B1 = s.A + (n - 2) * s.B, s.r * s.B
    con = _fit_entries("ricci_model", fit, [A1, B1], tol)
    info = {"A1": A1.tolist(), "B1": B1.tolist(), "ricci_asymmetry": _mx(s.Ric - s.Ric.T)}
    return hyp, con, info


def _t24b(s, tol):
    n = s.n
    hyp = _common_hgf(s, tol, r_nonzero=True, r_const=True)
    fit = fit_linear_forms(s.derivative("Ric"), [s.Ric_sym, s.g])
    con = _fit_entries("ricci_model", fit, [s.A + (n - 2) * s.B, s.r * s.B], tol)
    info = {"definitional_gap": "generalized 2-Ricci recurrence is undefined; checked as the Ricci model with B1 = rB and r constant"}
    return hyp, con, info


def _t24c(s, tol):
    n = s.n
    hyp = _common_hgf(s, tol, bianchi=True)
    lhs = _compose_ric_o(s.A + (n - 2) * s.B, s)
    rhs = s.r / 2 * (s.A + 2 * (n - 2) * s.B)
    eq5 = s.dr - (s.r * (s.A + (n - 2) * s.B) + s.r * n * s.B)
    con = [tol.con("ricci_operator_identity", _mx(lhs - rhs)), tol.con("scalar_derivative_identity", _mx(eq5))]
    return hyp, con, {"abs_dr": _mx(s.dr), "r": s.r}


def _t25a(s, tol):
    n = s.n
    hyp = _common_hgf(s, tol, r_nonzero=True, r_const=True)
    return hyp, [tol.con("A_plus_2(n-1)B", _mx(s.A + 2 * (n - 1) * s.B))], {}


def _t25b(s, tol):
    n = s.n
    hyp = _common_hgf(s, tol, bianchi=True, r_nonzero=True, r_const=True)
    M = tz.ricci_operator(s.Ric_sym, s.ginv)
    sigma, rho = tz.sharp(s.A, s.g), tz.sharp(s.B, s.g)
    con = [
        tol.con("A_o_Ric_o", _mx(_compose_ric_o(s.A, s) - s.r / n * s.A)),
        tol.con("B_o_Ric_o", _mx(_compose_ric_o(s.B, s) - s.r / n * s.B)),
        tol.con("Ric_o_sigma", _mx(M @ sigma - s.r / n * sigma)),
        tol.con("Ric_o_rho", _mx(M @ rho - s.r / n * rho)),
    ]
    return hyp, con, {"eigenvalue": s.r / n, "spectrum": sorted(np.linalg.eigvals(M).real.tolist())}


# ---------------------------------------------------------------------------
# Second-derivative chain
# ---------------------------------------------------------------------------


def _t26_hyp(s, tol, need_forms):
    n = s.n
    hyp = _common_hgf(s, tol, bianchi=True, r_nonzero=True, r_const=True)
    if need_forms:
        if "dA" not in s.extra or "dB" not in s.extra:
            return None
        dA, dB = s.extra["dA"], s.extra["dB"]
        dbA, dbB = tz.dbar(dA), tz.dbar(dB)
        hyp.append(tol.hyp("dbarB_relation", _mx(dbB + dbA / (2 * (n - 1)))))
        hyp.append(tol.hyp("pair_cyclic_identity", _mx(tz.cyclic_sum_pairs(np.multiply.outer(dbA, s.H)))))
    return hyp


def _t26a(s, tol):
    hyp = _t26_hyp(s, tol, False)
    model = np.multiply.outer(s.A, s.R) + np.multiply.outer(s.B, s.gRic)
    return hyp, [tol.con("cyclic_sum", _mx(tz.cyclic_sum_args(model, (0, 1, 2))))], {}


def dbar_kernel_sigma(H: np.ndarray) -> float:
    """Smallest singular value of w -> cyclic pair sum of w (x) H on skew w, relative to |H|."""
    n = H.shape[0]
    cols = []
    for i in range(n):
        for j in range(i + 1, n):
            w = np.zeros((n, n))
            w[i, j], w[j, i] = 1.0, -1.0
            cols.append(tz.cyclic_sum_pairs(np.multiply.outer(w, H)).ravel() / np.sqrt(2))
    sv = np.linalg.svd(np.stack(cols, axis=1), compute_uv=False)
    return float(sv[-1] / max(np.linalg.norm(H), 1e-300))


def _t26b(s, tol):
    hyp = _t26_hyp(s, tol, True)
    if hyp is None:
        return None
    n = s.n
    sigma = dbar_kernel_sigma(s.H)
    con = [
        tol.con_nonzero("kernel_sigma_min", sigma, KERNEL_TOL),
        tol.con("dbarA", _mx(tz.dbar(s.extra["dA"]))),
        tol.con("dbarB", _mx(tz.dbar(s.extra["dB"]))),
    ]
    info = {"H_pair_symmetry": tz.symmetry_residual(s.H, "pairsym((1,2),(3,4))"), "n": n}
    return hyp, con, info


def second_derivative(s: SyntheticScene) -> np.ndarray:
    """nabla nabla R [v, u, ...] by the product rule on the stored scene data."""
    dA, dB = s.extra["dA"], s.extra["dB"]
    gdRic = _kn_slots(s.g, s.dRic)
    DD = np.einsum("vu,abcd->vuabcd", dA, s.R) + np.einsum("u,vabcd->vuabcd", s.A, s.dR)
    DD += np.einsum("vu,abcd->vuabcd", dB, s.gRic) + np.einsum("u,vabcd->vuabcd", s.B, gdRic)
    return DD


def second_derivative_closed_form(s: SyntheticScene) -> np.ndarray:
    n = s.n
    A, B, dA, dB = s.A, s.B, s.extra["dA"], s.extra["dB"]
    cR = dA + np.outer(A, A).T  # [v, u] -> dA[v,u] + A[u]A[v]
    cG = 2 * s.r * np.outer(B, B)
    cK = np.outer(A, B).T + dB + np.outer(B, A).T + (n - 2) * np.outer(B, B)
    return (
        np.einsum("vu,abcd->vuabcd", cR, s.R)
        + np.einsum("vu,abcd->vuabcd", cG, s.G)
        + np.einsum("vu,abcd->vuabcd", cK, s.gRic)
    )


def _t26c(s, tol):
    hyp = _t26_hyp(s, tol, True)
    if hyp is None:
        return None
    DD = second_derivative(s)
    closed = second_derivative_closed_form(s)
    skew = DD - DD.transpose(1, 0, 2, 3, 4, 5)
    dbA, dbB = tz.dbar(s.extra["dA"]), tz.dbar(s.extra["dB"])
    # skew part of nabla nabla R; by the Ricci identity it equals -R(U,V).R
    chain = np.einsum("vu,abcd->vuabcd", dbA, s.R) + np.einsum("vu,abcd->vuabcd", dbB, s.gRic)
    via_H = np.einsum("vu,abcd->vuabcd", dbA, s.H)
    con = [
        tol.con("expansion_residual", _mx(DD - closed)),
        tol.con("skew_part_residual", _mx(skew - chain)),
        tol.con("H_reduction_residual", _mx(chain - via_H)),
        tol.con("curvature_action_via_chain", _mx(via_H)),
    ]
    direct = tz.curvature_action(_mixed(s), s.R)
    info = {"direct_action_on_scene_R": _mx(direct), "note": "scene R is not the curvature of a connection, so the direct action is informational"}
    return hyp, con, info


def _mixed(s: SyntheticScene) -> np.ndarray:
    """Rm[a, b, c, i] = R[a, b, c, d] g^{di}."""
    return np.einsum("abcd,di->abci", s.R, s.ginv)


# ---------------------------------------------------------------------------
# Vanishing scalar curvature
# ---------------------------------------------------------------------------


def _t27_hyp(s, tol):
    return _common_hgf(s, tol, bianchi=True, r_zero=True)


def _t27a(s, tol):
    con = [tol.con("A_o_Ric_o", _mx(_compose_ric_o(s.A, s))), tol.con("B_o_Ric_o", _mx(_compose_ric_o(s.B, s)))]
    return _t27_hyp(s, tol), con, {}


def _t27b(s, tol):
    sigma, rho = tz.sharp(s.A, s.g), tz.sharp(s.B, s.g)
    val = np.einsum("xycd,c,d->xy", s.R, rho, sigma)
    return _t27_hyp(s, tol), [tol.con("A_of_R_rho", _mx(val))], {}


def _t27c(s, tol):
    rho = tz.sharp(s.B, s.g)
    T = np.einsum("x,yzwd,d->xyzw", s.A, s.R, rho)
    return _t27_hyp(s, tol), [tol.con("cyclic_sum", _mx(tz.cyclic_sum_args(T, (0, 1, 2))))], {}


# ---------------------------------------------------------------------------
# Conharmonic results
# ---------------------------------------------------------------------------


def _t33a(s, tol):
    n = s.n
    hyp = _common_hgf(s, tol, r_nonzero=True)
    fit = fit_linear_forms(s.dCH, [s.CH, s.G])
    # the two forms are identifiable only when CH is not a multiple of G
    hyp.append(tol.hyp_nonzero("CH_G_independence", 1.0 / fit.condition if fit.form(0) is not None else 0.0))
    B2 = -2 * s.r * s.B / (n - 2)
    con = _fit_entries("conharmonic_model", fit, [s.A, B2], tol)
    return hyp, con, {"expected_B": B2.tolist()}


def _t33b(s, tol):
    hyp = _common_hgf(s, tol, r_zero=True)
    hyp.append(tol.hyp_nonzero("abs_CH", _mx(s.CH)))
    fit = fit_linear_forms(s.dCH, [s.CH])
    return hyp, _fit_entries("conharmonic_model", fit, [s.A], tol), {}


def _t34(s, tol, generalized):
    n = s.n
    lam = s.r * (n - 2) / (2 * n * (n - 1))
    hyp = [tol.hyp("einstein_like", _mx(s.Ric_sym - lam * s.g)), tol.hyp_nonzero("abs_R", _mx(s.R))]
    basis_c = [s.C, s.G] if generalized else [s.C]
    basis_h = [s.CH, s.G] if generalized else [s.CH]
    fc, fh = fit_linear_forms(s.dC, basis_c), fit_linear_forms(s.dCH, basis_h)
    form_gap = max(
        (np.inf if (a is None) != (b is None) else (0.0 if a is None else _mx(a - b)))
        for a, b in zip(fc.forms, fh.forms)
    )
    con = [
        tol.con("C_minus_CH", _mx(s.C - s.CH), 1e-10),
        tol.con("dC_minus_dCH", _mx(s.dC - s.dCH), 1e-10),
        tol.con("fit_residual_gap", abs(fc.residual - fh.residual)),
        tol.con("fitted_form_gap", form_gap),
    ]
    info = {"concircular_fit_residual": fc.residual, "conharmonic_fit_residual": fh.residual}
    return hyp, con, info


def _t35a(s, tol):
    n = s.n
    hyp = [
        tol.hyp("gcf_model", _gcf_residual(s)),
        tol.hyp("ricci_hypothesis", _mx(s.dRic + (n - 2) / 2 * np.multiply.outer(s.B, s.g))),
    ]
    fit = fit_linear_forms(s.dR, [s.R, s.gRic])
    con = [tol.con("hgf_fit_residual", fit.residual)]
    D = fit.form(1)
    stated, derived = -s.B / (n - 2), -s.A / (n - 2)
    err_s = np.inf if D is None else _mx(D - stated)
    err_d = np.inf if D is None else _mx(D - derived)
    if err_d < tol.conclusion and err_s < tol.conclusion:
        verdict = "both candidates agree on this scene"
    elif err_d < tol.conclusion:
        verdict = "fitted D matches -A/(n-2), not -B/(n-2)"
    elif err_s < tol.conclusion:
        verdict = "fitted D matches -B/(n-2), not -A/(n-2)"
    else:
        verdict = "fitted D matches neither candidate"
    info = {
        "fitted_A": None if fit.form(0) is None else fit.form(0).tolist(),
        "fitted_D": None if D is None else D.tolist(),
        "candidate_minus_B_over_n_minus_2": stated.tolist(),
        "candidate_minus_A_over_n_minus_2": derived.tolist(),
        "error_vs_minus_B_candidate": err_s,
        "error_vs_minus_A_candidate": err_d,
        "verdict": verdict,
    }
    return hyp, con, info


def _t35b(s, tol):
    hyp = [tol.hyp("gcf_model", _gcf_residual(s)), tol.hyp("ricci_recurrent", _mx(s.dRic - np.multiply.outer(s.A, s.Ric_sym)))]
    fit = fit_linear_forms(s.dR, [s.R, s.G])
    return hyp, _fit_entries("generalized_recurrent_model", fit, [s.A, s.B], tol), {"trace_defects": s.trace_defects()}


def _t35c(s, tol):
    n = s.n
    target = np.multiply.outer(s.A, s.Ric_sym) - (n - 2) / 2 * np.multiply.outer(s.B, s.g)
    hyp = [tol.hyp("gcf_model", _gcf_residual(s)), tol.hyp("ricci_hypothesis", _mx(s.dRic - target))]
    fit = fit_linear_forms(s.dR, [s.R])
    return hyp, _fit_entries("recurrent_model", fit, [s.A], tol), {"trace_defects": s.trace_defects()}


_CHECKS = {
    "T2.4a": _t24a, "T2.4b": _t24b, "T2.4c": _t24c,
    "T2.5a": _t25a, "T2.5b": _t25b,
    "T2.6a": _t26a, "T2.6b": _t26b, "T2.6c": _t26c,
    "T2.7a": _t27a, "T2.7b": _t27b, "T2.7c": _t27c,
    "T3.3a": _t33a, "T3.3b": _t33b,
    "T3.4a": lambda s, t: _t34(s, t, False), "T3.4b": lambda s, t: _t34(s, t, True),
    "T3.5a": _t35a, "T3.5b": _t35b, "T3.5c": _t35c,
}


def verify_theorem(check_id: str, scene: SyntheticScene, tolerances=None) -> CheckReport:
    """Measure a check's hypotheses and conclusions on a scene."""
    if check_id not in _CHECKS:
        raise ValueError(f"unknown check id {check_id!r}")
    tol = tolerances if isinstance(tolerances, Tolerances) else Tolerances(tolerances)
    if scene.n < 3:
        return CheckReport(check_id, reason="recurrence results need n >= 3")
    out = _CHECKS[check_id](scene, tol)
    if out is None:
        return CheckReport(check_id, reason="scene carries no second-derivative data for the recurrence forms")
    hyp, con, info = out
    return CheckReport(check_id, hyp, con, _jsonable(info))


def _jsonable(d: dict) -> dict:
    out = {}
    for k, v in d.items():
        if isinstance(v, np.ndarray):
            v = v.tolist()
        elif isinstance(v, (np.floating,)):
            v = float(v)
        elif isinstance(v, float) and not np.isfinite(v):
            v = str(v)
        out[k] = v
    return out


# ---------------------------------------------------------------------------
# Hypothesis-matched scenes
# ---------------------------------------------------------------------------

HYPOTHESIS_SCENES = {
    "T2.4a": dict(symmetry_class="pairsym", constraints=(), kind="hyper_generalized"),
    "T2.4b": dict(symmetry_class="algebraic", constraints=("bianchi", "r_constant"), kind="hyper_generalized"),
    "T2.4c": dict(symmetry_class="algebraic", constraints=("bianchi",), kind="hyper_generalized"),
    "T2.5a": dict(symmetry_class="algebraic", constraints=("bianchi", "r_constant"), kind="hyper_generalized"),
    "T2.5b": dict(symmetry_class="algebraic", constraints=("bianchi", "r_constant"), kind="hyper_generalized"),
    "T2.6a": dict(symmetry_class="algebraic", constraints=("bianchi", "r_constant"), kind="hyper_generalized"),
    "T2.6b": dict(symmetry_class="algebraic", constraints=("bianchi", "r_constant"), kind="hyper_generalized"),
    "T2.6c": dict(symmetry_class="algebraic", constraints=("bianchi", "r_constant"), kind="hyper_generalized"),
    "T2.7a": dict(symmetry_class="algebraic", constraints=("bianchi", "r_zero"), kind="hyper_generalized"),
    "T2.7b": dict(symmetry_class="algebraic", constraints=("bianchi", "r_zero"), kind="hyper_generalized"),
    "T2.7c": dict(symmetry_class="algebraic", constraints=("bianchi", "r_zero"), kind="hyper_generalized"),
    "T3.3a": dict(symmetry_class="antisym", constraints=(), kind="hyper_generalized"),
    "T3.3b": dict(symmetry_class="antisym", constraints=("r_zero",), kind="hyper_generalized"),
    "T3.4a": dict(symmetry_class="algebraic", constraints=("einstein_like",), kind="concircular_recurrent"),
    "T3.4b": dict(symmetry_class="algebraic", constraints=("einstein_like",), kind="generalized_concircular"),
    "T3.5a": dict(symmetry_class="pairsym", constraints=(), kind="gcf_ric_B"),
    "T3.5b": dict(symmetry_class="pairsym", constraints=(), kind="gcf_ricci_recurrent"),
    "T3.5c": dict(symmetry_class="pairsym", constraints=(), kind="gcf_ric_AB"),
}


def hypothesis_scene(check_id: str, n: int, seed: int) -> SyntheticScene:
    """A seeded scene built to satisfy the hypotheses of ``check_id``."""
    try:
        params = HYPOTHESIS_SCENES[check_id]
    except KeyError:
        raise ValueError(f"unknown check id {check_id!r}") from None
    return synth_scene(n, seed, **params)
