"""Pointwise checks of a metric's connection, curvature and jets at sample points."""

from __future__ import annotations

import itertools

import numpy as np

from . import tensors as tz
from .connection import PointGeometry
from .curvature import CurvatureField
from .jets import canonical, eval_jet, finite_difference, variable_names
from .metric import EvalPoint, InadmissiblePointError, MetricSpec, eval_L
from .recurrence.classify import geometric_snapshot
from .recurrence.scenes import SyntheticScene
from .recurrence.theorems import THEOREM_CHECKS, verify_theorem
from .report import CheckReport, Entry, Tolerances

GEOMETRIC_CHECKS = (
    "cartan-axioms",
    "homogeneity",
    "jet-oracle",
    "kn-identities",
    "curvature-symmetries",
    "conharmonic-decomposition",
)
ALL_CHECKS = GEOMETRIC_CHECKS + THEOREM_CHECKS

DEFAULT_BOX = (-0.5, 0.5)
HOMOGENEITY_LAMBDAS = (0.5, 2.0, 3.0)
JET_ORACLE_ORDER = 3


def sample_points(n: int, count: int, seed: int, box=DEFAULT_BOX) -> list[EvalPoint]:
    """Seeded points: x uniform in box^n, y uniform on the unit sphere."""
    if count < 1:
        raise ValueError("sample count must be >= 1")
    lo, hi = map(float, box)
    if not lo < hi:
        raise ValueError("box bounds must satisfy lo < hi")
    rng = np.random.default_rng([seed, n])
    out = []
    for _ in range(count):
        x = rng.uniform(lo, hi, size=n)
        y = rng.normal(size=n)
        out.append(EvalPoint(x, y / np.linalg.norm(y)))
    return out


def _mx(a) -> float:
    return float(np.abs(np.asarray(a)).max()) if np.size(a) else 0.0


def _rel(a, b) -> float:
    return _mx(np.asarray(a) - np.asarray(b)) / (1.0 + _mx(b))


# ---------------------------------------------------------------------------
# per-point measurements: each returns (hypotheses, conclusions, info)
# ---------------------------------------------------------------------------


def _cartan_axioms(spec, p, tol):
    geo = PointGeometry(spec, p, 3)
    cd = geo.connection_data()
    res = cd.residuals()
    cart = geo.cartan.value
    con = [
        tol.con("nabla_g", _mx(geo.nabla(geo.g).value), 1e-8),
        tol.con("h_torsion", res["torsion"], 1e-14),
        tol.con("deflection", res["deflection"], 1e-9),
        tol.con("cartan_symmetry", max(_mx(cart - cart.transpose(pm)) for pm in itertools.permutations(range(3))), 1e-12),
        tol.con("cartan_y_contraction", res["hv_contraction"], 1e-9),
        tol.con("spray_homogeneity", res["spray_homogeneity"], 1e-9),
    ]
    return [], con, {}


def _homogeneity(spec, p, tol):
    base = PointGeometry(spec, p, 4)
    L0 = eval_L(spec, p)
    worst = {"L": 0.0, "g": 0.0, "G": 0.0, "N": 0.0, "F": 0.0, "R": 0.0}
    for lam in HOMOGENEITY_LAMBDAS:
        q = p.scaled(lam)
        geo = PointGeometry(spec, q, 4)
        worst["L"] = max(worst["L"], abs(eval_L(spec, q) - lam * L0) / (lam * L0))
        worst["g"] = max(worst["g"], _rel(geo.g.value, base.g.value))
        worst["G"] = max(worst["G"], _rel(geo.G.value, lam**2 * base.G.value))
        worst["N"] = max(worst["N"], _rel(geo.N.value, lam * base.N.value))
        worst["F"] = max(worst["F"], _rel(geo.F.value, base.F.value))
        worst["R"] = max(worst["R"], _rel(geo.R.value, base.R.value))
    con = [tol.con(f"{k}_degree", v, 1e-9) for k, v in worst.items()]
    return [], con, {"lambdas": list(HOMOGENEITY_LAMBDAS)}


def jet_oracle_errors(e, p, order: int = JET_ORACLE_ORDER, h: float = 1e-5) -> dict:
    """Worst relative jet-vs-finite-difference error for each order 1..order.

    The error of a partial is |jet - fd| / max(1, |jet|).
    """
    n = len(p.x)
    jet = eval_jet(e, p, order)
    names = variable_names(n)
    out = {}
    for k in range(1, order + 1):
        worst = 0.0
        for combo in itertools.combinations_with_replacement(range(2 * n), k):
            key = canonical([names[v] for v in combo], n)
            exact = jet.partial(*key)
            fd = finite_difference(e, p, key, h)
            worst = max(worst, abs(exact - fd) / max(1.0, abs(exact)))
        out[k] = worst
    return out


def _jet_oracle(spec, p, tol):
    errs = {}
    for label, e in (("L", spec.L_expr()), ("L2", spec.L2_expr())):
        for k, v in jet_oracle_errors(e, p).items():
            errs[f"{label}_order{k}"] = v
    return [], [tol.con(f"jet_vs_fd_{k}", v, 1e-5) for k, v in errs.items()], {}


def _kn_identities(spec, p, tol):
    cf = CurvatureField(spec, p)
    n = spec.n
    g = cf.g.value
    ginv = np.linalg.inv(g)
    Ric = 0.5 * (cf.Ric.value + cf.Ric.value.T)
    con = [tol.con("gg_minus_2G", _mx(tz.kulkarni_nomizu(g, g) - 2 * tz.big_G(g)), 1e-14)]
    for name, t in (("g", g), ("Ric", Ric)):
        lhs = tz.ricci(tz.kulkarni_nomizu(g, t), ginv)
        rhs = (n - 2) * t + np.einsum("xz,xz->", t, ginv) * g
        con.append(tol.con(f"kn_trace_{name}", _rel(lhs, rhs), 1e-12))
    return [], con, {}


def _curvature_symmetries(spec, p, tol):
    cf = CurvatureField(spec, p)
    R = cf.R.value
    con = [tol.con("R_antisym_34", _rel(R, -R.transpose(0, 1, 3, 2)), 1e-10)]
    info = {
        "R_antisym_12": _rel(R, -R.transpose(1, 0, 2, 3)),
        "R_pair_symmetry": _rel(R, R.transpose(2, 3, 0, 1)),
        "ricci_asymmetry": cf.ricci_asymmetry(),
    }
    return [], con, info


def _conharmonic_decomposition(spec, p, tol):
    n = spec.n
    if n < 3:
        return None
    cf = CurvatureField(spec, p, 1)
    g = cf.g.value
    dR, dRic, dr = cf.nabla("R").value, cf.nabla("Ric").value, cf.nabla("r").value
    dCH = cf.nabla("CH").value
    dC = cf.nabla("C").value
    dgRic = np.stack([tz.kulkarni_nomizu(g, 0.5 * (dRic[m] + dRic[m].T), check=False) for m in range(n)])
    model_ch = dR - dgRic / (n - 2)
    model_c = dR - np.multiply.outer(dr, tz.big_G(g)) / (n * (n - 1))
    con = [
        tol.con("conharmonic_derivative", _rel(dCH, model_ch), 1e-8),
        tol.con("concircular_derivative", _rel(dC, model_c), 1e-8),
        tol.con("conharmonic_definition", _rel(cf.CH.value, cf.R.value - cf.gRic.value / (n - 2)), 1e-12),
    ]
    return [], con, {}


_GEOMETRIC = {
    "cartan-axioms": _cartan_axioms,
    "homogeneity": _homogeneity,
    "jet-oracle": _jet_oracle,
    "kn-identities": _kn_identities,
    "curvature-symmetries": _curvature_symmetries,
    "conharmonic-decomposition": _conharmonic_decomposition,
}


def _theorem_on_point(check_id):
    def run(spec, p, tol):
        if spec.n < 3:
            return None
        rep = verify_theorem(check_id, geometric_snapshot(spec, p), tol)
        if rep.reason:
            return None
        return rep.hypotheses, rep.conclusions, rep.info

    return run


# ---------------------------------------------------------------------------
# merging over samples
# ---------------------------------------------------------------------------


def _merge(entries_per_sample: list) -> list:
    """Worst case per entry name: max for zero-requirements, min for nonzero."""
    merged: dict = {}
    for entries in entries_per_sample:
        for e in entries:
            cur = merged.get(e.name)
            if cur is None:
                merged[e.name] = Entry(e.name, e.value, e.tol, e.require)
                continue
            worse = e.value > cur.value if e.require == "zero" else e.value < cur.value
            if worse or np.isnan(e.value):
                cur.value = e.value
    return list(merged.values())


def run_geometric_check(check_id: str, spec: MetricSpec, samples, tolerances=None) -> CheckReport:
    """Run one check at every sample point and merge to worst-case entries."""
    tol = tolerances if isinstance(tolerances, Tolerances) else Tolerances(tolerances)
    if check_id in _GEOMETRIC:
        fn = _GEOMETRIC[check_id]
    elif check_id in THEOREM_CHECKS:
        fn = _theorem_on_point(check_id)
    else:
        raise ValueError(f"unknown check id {check_id!r}")
    hyps, cons, rejected, infos = [], [], [], []
    for k, p in enumerate(samples):
        try:
            out = fn(spec, p, tol)
        except (InadmissiblePointError, ArithmeticError) as err:
            rejected.append({"sample": k, "reason": str(err)})
            continue
        if out is None:
            return CheckReport(check_id, reason=f"check {check_id} does not apply to metric {spec.name or spec.family} at n={spec.n}")
        h, c, info = out
        hyps.append(h)
        cons.append(c)
        if info:
            infos.append({"sample": k, **info})
    if not cons:
        return CheckReport(check_id, info={"rejected": rejected}, reason="no admissible samples")
    info = {"samples": len(cons)}
    if rejected:
        info["rejected"] = rejected
    if infos:
        info["per_sample"] = infos
    return CheckReport(check_id, _merge(hyps), _merge(cons), info)


def run_check(check_id: str, source, samples=None, tolerances=None) -> CheckReport:
    """Dispatch a check to a synthetic scene or to a metric at sample points."""
    if isinstance(source, SyntheticScene):
        if check_id not in THEOREM_CHECKS:
            return CheckReport(check_id, reason=f"{check_id} needs a metric, not a synthetic scene")
        return verify_theorem(check_id, source, tolerances)
    if not samples:
        raise ValueError("metric checks need at least one sample point")
    return run_geometric_check(check_id, source, samples, tolerances)
