import numpy as np
import pytest

from finslerlab.geometric import ALL_CHECKS, GEOMETRIC_CHECKS, jet_oracle_errors, run_check, sample_points
from finslerlab.metric import EvalPoint, MetricSpec, builtin
from finslerlab.recurrence import synth_scene
from tests.conftest import SCHWARZSCHILD_BOX, points


def test_sampler_is_seeded_and_on_unit_sphere():
    a, b = sample_points(3, 5, 7), sample_points(3, 5, 7)
    assert a == b
    assert all(abs(np.linalg.norm(p.y) - 1) < 1e-14 for p in a)
    assert all(-0.5 <= v <= 0.5 for p in a for v in p.x)
    with pytest.raises(ValueError):
        sample_points(3, 0, 1)


@pytest.mark.parametrize("cid", GEOMETRIC_CHECKS)
def test_geometric_checks_pass_on_randers(cid):
    rep = run_check(cid, builtin("randers_wind", n=3), points(3, 2))
    assert rep.status == "pass", rep.to_json()


def test_concircular_equals_conharmonic_on_ricci_flat():
    spec = builtin("euclidean_schwarzschild")
    pts = points(4, 2, box=SCHWARZSCHILD_BOX)
    for cid in ("T3.4a", "T3.4b"):
        rep = run_check(cid, spec, pts)
        assert rep.status == "pass", rep.to_json()


def test_theorems_on_generic_metric_not_applicable():
    rep = run_check("T2.5a", builtin("randers_wind", n=3), points(3, 2))
    assert rep.status == "not-applicable"


def test_inadmissible_samples_are_rejected():
    spec = MetricSpec.randers(2, [["1", "0"], ["0", "1"]], ["1.5", "0"])
    rep = run_check("cartan-axioms", spec, [EvalPoint([0, 0], [-1, 0]), EvalPoint([0, 0], [1, 0])])
    assert rep.info["rejected"][0]["sample"] == 0
    all_bad = run_check("cartan-axioms", spec, [EvalPoint([0, 0], [-1, 0])])
    assert all_bad.status == "not-applicable"


def test_scene_dispatch():
    s = synth_scene(4, 0, "pairsym")
    assert run_check("T2.4a", s).status == "pass"
    assert run_check("cartan-axioms", s).status == "not-applicable"
    with pytest.raises(ValueError):
        run_check("nope", builtin("sphere", n=3), points(3, 1))


def test_jet_oracle_errors_small():
    spec = builtin("quartic", n=3)
    errs = jet_oracle_errors(spec.L_expr(), points(3, 1)[0])
    assert set(errs) == {1, 2, 3}
    assert max(errs.values()) < 1e-5


def test_check_ids_unique():
    assert len(set(ALL_CHECKS)) == len(ALL_CHECKS)
