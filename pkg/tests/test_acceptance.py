"""Acceptance criteria, one PASS/FAIL line each.

Lines are printed as the tests run and repeated in the terminal summary.
"""

import json

import numpy as np
import pytest

from finslerlab import tensors as tz
from finslerlab.cli import run_cli
from finslerlab.connection import PointGeometry
from finslerlab.curvature import CurvatureField
from finslerlab.geometric import jet_oracle_errors, sample_points
from finslerlab.metric import builtin, corpus, fundamental_tensor
from finslerlab.recurrence import KINDS, THEOREM_CHECKS, classify, fit_linear_forms, hypothesis_scene, planted_forms, synth_scene, verify_theorem
from finslerlab.recurrence.scenes import random_spd
from tests.conftest import SCHWARZSCHILD_BOX

RESULTS = []

# tolerances pinned by the acceptance criteria
NABLA_G_TOL = 1e-8
DEFLECTION_TOL = 1e-9
ORACLE_TOL = 1e-7
GG_TOL = 1e-14
KN_TRACE_TOL = 1e-12
COEFF_TOL = 1e-7
RESIDUAL_TOL = 1e-9
CONCLUSION_TOL = 1e-7
JET_REL_TOL = 1e-5
FD_STEP = 1e-5


def record(label, ok, detail=""):
    line = f"ACCEPTANCE {label}: {'PASS' if ok else 'FAIL'}" + (f" ({detail})" if detail else "")
    RESULTS.append(line)
    print(line)
    return ok


def _corpus_points(spec, count, seed):
    box = SCHWARZSCHILD_BOX if spec.name.startswith("euclidean_schwarzschild") else (-0.5, 0.5)
    return sample_points(spec.n, count, seed, box)


def test_1_cartan_axioms():
    worst = {"nabla_g": 0.0, "torsion": 0.0, "deflection": 0.0}
    specs = [builtin("euclidean", n=3), builtin("sphere", n=3), builtin("hyperbolic", n=3), builtin("quartic", n=3)]
    specs += [builtin("randers_constant", n=3, b1=b) for b in (0.1, 0.4, 0.8)]
    specs += [builtin("randers_wind", n=3), builtin("randers_sphere", n=3)]
    for spec in specs:
        for p in sample_points(3, 20, 101):
            geo = PointGeometry(spec, p, 3)
            res = geo.connection_data().residuals()
            worst["nabla_g"] = max(worst["nabla_g"], float(np.abs(geo.nabla(geo.g).value).max()))
            worst["torsion"] = max(worst["torsion"], res["torsion"])
            worst["deflection"] = max(worst["deflection"], res["deflection"])
    ok = worst["nabla_g"] < NABLA_G_TOL and worst["torsion"] == 0.0 and worst["deflection"] < DEFLECTION_TOL
    assert record("1 cartan axioms", ok, ", ".join(f"{k}={v:.2e}" for k, v in worst.items())), worst


def test_2_riemannian_oracle():
    spec = builtin("sphere", n=3)
    errs = {"Ric-2g": 0.0, "r-6": 0.0, "C": 0.0, "CH+3G": 0.0}
    for p in sample_points(3, 10, 102):
        cf = CurvatureField(spec, p)
        g, G = cf.g.value, cf.G.value
        errs["Ric-2g"] = max(errs["Ric-2g"], float(np.abs(cf.Ric.value - 2 * g).max()))
        errs["r-6"] = max(errs["r-6"], abs(float(cf.r.value) - 6.0))
        errs["C"] = max(errs["C"], float(np.abs(cf.C.value).max()))
        errs["CH+3G"] = max(errs["CH+3G"], float(np.abs(cf.CH.value + 3 * G).max()))
    ok = max(errs.values()) < ORACLE_TOL
    assert record("2 sphere oracle", ok, ", ".join(f"{k}={v:.2e}" for k, v in errs.items())), errs


def test_3_gg_equals_2G():
    worst = 0.0
    for spec in corpus(3) + [builtin("euclidean_schwarzschild")]:
        for p in _corpus_points(spec, 5, 103):
            g = fundamental_tensor(spec, p)
            worst = max(worst, float(np.abs(tz.kulkarni_nomizu(g, g) - 2 * tz.big_G(g)).max()))
    rng = np.random.default_rng(103)
    for _ in range(100):
        n = int(rng.integers(3, 6))
        g = random_spd(rng, n)
        worst = max(worst, float(np.abs(tz.kulkarni_nomizu(g, g) - 2 * tz.big_G(g)).max()))
    assert record("3 g^g - 2G", worst < GG_TOL, f"max={worst:.2e}"), worst


def test_4_kn_contraction():
    rng = np.random.default_rng(104)
    worst = 0.0
    for n in (3, 4, 5):
        for _ in range(100):
            g = random_spd(rng, n)
            ginv = np.linalg.inv(g)
            t = rng.normal(size=(n, n))
            t = t + t.T
            lhs = tz.ricci(tz.kulkarni_nomizu(g, t), ginv)
            rhs = (n - 2) * t + np.einsum("xz,xz->", t, ginv) * g
            worst = max(worst, float(np.abs(lhs - rhs).max()))
    assert record("4 KN contraction", worst < KN_TRACE_TOL, f"max={worst:.2e}"), worst


def test_5_planted_recovery():
    failures = []
    worst_coef = worst_res = 0.0
    for tag, kind in KINDS.items():
        for seed in range(100):
            # pair-symmetric R at n = 3 makes CH a multiple of G, so n = 3 uses the antisym class
            n, cls = (3, "antisym") if seed % 2 else (4, "pairsym")
            s = synth_scene(n, seed, cls, kind=tag)
            fit = fit_linear_forms(s.derivative(kind.derivative), [s.tensor(t) for t in kind.basis])
            coef = max([np.inf if fit.form(k) is None else float(np.abs(fit.form(k) - f).max()) for k, f in enumerate(planted_forms(s))] or [0.0])
            member = classify(s)["kinds"][tag]["member"]
            worst_coef, worst_res = max(worst_coef, coef), max(worst_res, fit.residual)
            if not (coef < COEFF_TOL and fit.residual < RESIDUAL_TOL and member):
                failures.append((tag, n, seed, coef, fit.residual, member))
    ok = not failures
    assert record("5 planted recovery", ok, f"10 kinds x 100 scenes, coef={worst_coef:.2e}, residual={worst_res:.2e}, failures={len(failures)}"), failures[:5]


SUITE = [c for c in THEOREM_CHECKS if c not in ("T2.4b", "T3.5a")]


@pytest.mark.parametrize("n", [4])
def test_6_theorem_suite(n):
    lines = []
    ok = True
    for cid in SUITE:
        statuses = []
        worst = 0.0
        for seed in range(5):
            rep = verify_theorem(cid, hypothesis_scene(cid, n, seed))
            statuses.append(rep.status)
            worst = max(worst, rep.conclusion_residual())
        passed = all(s == "pass" for s in statuses) and worst < CONCLUSION_TOL
        ok &= passed
        lines.append(f"{cid}={'pass' if passed else statuses}")
    t35a = verify_theorem("T3.5a", hypothesis_scene("T3.5a", n, 0)).to_json()
    info = t35a["info"]
    lines.append(f"T3.5a D={np.round(info['fitted_D'], 6).tolist()} verdict: {info['verdict']}")
    assert record(f"6 theorem suite n={n}", ok, "; ".join(lines)), lines


@pytest.mark.xfail(strict=True, reason="r = 0 contraction results do not hold on n = 3 scenes; see decisions ledger")
def test_6_theorem_suite_n3():
    lines = []
    ok = True
    for cid in SUITE:
        try:
            rep = verify_theorem(cid, hypothesis_scene(cid, 3, 0))
        except ValueError:
            lines.append(f"{cid}=infeasible")
            continue
        ok &= rep.status == "pass"
        lines.append(f"{cid}={rep.status}" + (f"({rep.conclusion_residual():.1e})" if rep.status == "fail" else ""))
    record("6 theorem suite n=3", ok, "; ".join(lines))
    assert ok, lines


def test_7_jet_oracle():
    worst = {1: 0.0, 2: 0.0, 3: 0.0}
    for spec in corpus(3) + [builtin("euclidean_schwarzschild")]:
        for p in _corpus_points(spec, 2, 107):
            for e in (spec.L_expr(), spec.L2_expr()):
                for k, v in jet_oracle_errors(e, p, 3, FD_STEP).items():
                    worst[k] = max(worst[k], v)
    ok = max(worst.values()) < JET_REL_TOL
    assert record("7 jet vs finite differences", ok, ", ".join(f"order{k}={v:.2e}" for k, v in worst.items())), worst


def test_8_determinism(tmp_path):
    def run(args, name):
        out = tmp_path / name
        code = run_cli(args + ["-o", str(out)])
        text = out.read_text()
        rep = json.loads(text)
        rep.pop("wall_clock_seconds", None)
        return code, json.dumps(rep, sort_keys=True)

    scene_texts = []
    for k in range(2):
        path = tmp_path / "scene.json"
        run_cli(["synth", "--n", "4", "--seed", "11", "--class", "pairsym", "-o", str(path)])
        scene_texts.append(path.read_bytes())
    same = [scene_texts[0] == scene_texts[1]]
    commands = [
        ["verify", "--metric", "randers_wind", "--n", "3", "--samples", "3", "--seed", "8"],
        ["classify", "--metric", "randers_sphere", "--n", "3", "--samples", "2", "--seed", "8"],
        ["classify", "--scene", str(tmp_path / "scene.json")],
        ["eval", "--metric", "quartic", "--n", "3", "--samples", "2", "--seed", "8"],
    ]
    for cmd in commands:
        first, second = run(cmd, "a.json"), run(cmd, "a.json")
        same.append(first == second)
    assert record("8 determinism", all(same), f"{sum(same)}/{len(same)} byte-identical"), same
