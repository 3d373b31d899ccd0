import json

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from finslerlab.cli import ConfigError, RunConfig, load_config, run_cli, save_config, validate_config, write_report
from finslerlab.geometric import ALL_CHECKS
from finslerlab.report import CheckReport


def _read(path):
    return json.loads(path.read_text())


def test_verify_cartan_axioms(tmp_path):
    metric = tmp_path / "sphere3.json"
    metric.write_text(json.dumps({"builtin": "sphere", "n": 3}))
    out = tmp_path / "r.json"
    code = run_cli(["verify", "--metric", str(metric), "--checks", "cartan-axioms", "--samples", "20", "--seed", "7", "-o", str(out)])
    assert code == 0
    rep = _read(out)
    [check] = rep["checks"]
    assert check["status"] == "pass"
    nabla_g = next(e for e in check["conclusions"] if e["name"] == "nabla_g")
    assert nabla_g["value"] < 1e-8


def test_synth_then_classify(tmp_path):
    scene = tmp_path / "hgf_n4_seed11.json"
    assert run_cli(["synth", "--n", "4", "--seed", "11", "--class", "pairsym", "-o", str(scene)]) == 0
    out = tmp_path / "c.json"
    assert run_cli(["classify", "--scene", str(scene), "-o", str(out)]) == 0
    kinds = _read(out)["classification"]["kinds"]
    assert kinds["hyper_generalized"]["member"]
    assert kinds["generalized_ricci_recurrent"]["member"]
    assert kinds["generalized_ricci_recurrent"]["A"][0] is not None


def test_synth_verify_round_trip_n4(tmp_path):
    scene = tmp_path / "scene.json"
    assert run_cli(["synth", "--n", "4", "--constraints", "r_zero,bianchi", "--seed", "5", "-o", str(scene)]) == 0
    assert run_cli(["verify", "--scene", str(scene), "--checks", "T2.7a", "-o", str(tmp_path / "v.json")]) == 0


def test_failing_check_exits_1(tmp_path):
    # the r = 0 contraction results fail on three-dimensional scenes
    scene = tmp_path / "scene.json"
    assert run_cli(["synth", "--n", "3", "--constraints", "r_zero,bianchi", "--seed", "5", "-o", str(scene)]) == 0
    assert run_cli(["verify", "--scene", str(scene), "--checks", "T2.7a", "-o", str(tmp_path / "v.json")]) == 1


def test_unknown_check_exits_2(tmp_path, capsys):
    code = run_cli(["verify", "--metric", "sphere", "--n", "3", "--checks", "T9.9", "-o", str(tmp_path / "x.json")])
    assert code == 2
    assert "T9.9" in capsys.readouterr().err


def test_eval_prints_tensors(tmp_path):
    out = tmp_path / "e.json"
    assert run_cli(["eval", "--metric", "hyperbolic", "--n", "3", "--samples", "2", "--seed", "1", "-o", str(out)]) == 0
    rep = _read(out)
    pt = rep["points"][0]
    assert pt["status"] == "ok"
    R = pt["tensors"]["R"]
    assert R["shape"] == [3, 3, 3, 3] and len(R["data"]) == 81
    assert pt["tensors"]["r"] == pytest.approx(-6.0)


@pytest.mark.parametrize(
    "config, field",
    [
        ({}, "metric/scene"),
        ({"metric": {"builtin": "sphere"}, "scene": "x.json"}, "metric/scene"),
        ({"metric": {"builtin": "nope"}}, "metric"),
        ({"metric": {"builtin": "sphere"}, "samples": {"count": 0}}, "samples.count"),
        ({"metric": {"builtin": "sphere"}, "samples": {"count": 2, "box": [1, 0]}}, "samples.box"),
        ({"metric": {"builtin": "sphere"}, "samples": {"points": [{"x": [0, 0, 0], "y": [0, 0, 0]}]}}, "samples.points[0]"),
        ({"metric": {"builtin": "sphere"}, "checks": ["T2.4a", "bogus"]}, "checks"),
        ({"metric": {"builtin": "sphere"}, "tolerances": {"conclusion": -1}}, "tolerances.conclusion"),
        ({"metric": {"builtin": "sphere"}, "extra": 1}, "extra"),
    ],
)
def test_schema_violations_named(config, field):
    problems = validate_config(config)
    assert any(p.startswith(field) for p in problems), problems


def test_every_violation_listed():
    problems = validate_config({"metric": {"builtin": "sphere"}, "samples": {"count": -1, "seed": "x"}, "checks": ["a", "b"]})
    assert len(problems) == 4


@pytest.mark.parametrize(
    "text",
    ["{not json", "[]", json.dumps({"metric": {"family": "riemannian", "n": 2, "a": [["1", "0"], ["0"]]}})],
)
def test_malformed_config_exits_2(tmp_path, text):
    cfg = tmp_path / "bad.json"
    cfg.write_text(text)
    assert run_cli(["verify", "--config", str(cfg), "-o", str(tmp_path / "o.json")]) == 2


def test_bad_arguments_exit_2(tmp_path):
    assert run_cli(["frobnicate"]) == 2
    assert run_cli(["synth", "--n", "3"]) == 2
    assert run_cli(["synth", "--n", "3", "--seed", "1", "--constraints", "wobble"]) == 2
    assert run_cli(["eval", "--metric", str(tmp_path / "missing.json")]) == 2
    assert run_cli(["verify", "--metric", "sphere", "--tol", "conclusion=-3", "-o", str(tmp_path / "o.json")]) == 2


def test_config_round_trip(tmp_path):
    cfg = RunConfig.from_json({"metric": {"builtin": "sphere", "n": 3}, "samples": {"count": 2, "seed": 4}, "checks": ["T2.4a"], "tolerances": {"conclusion": 1e-6}})
    path = tmp_path / "cfg.json"
    save_config(cfg, path)
    assert load_config(path) == cfg
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")


def test_explicit_points_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"metric": {"builtin": "euclidean", "n": 3}, "samples": {"points": [{"x": [0, 0, 0], "y": [1, 0, 0]}]}, "output": str(tmp_path / "o.json")}))
    assert run_cli(["eval", "--config", str(cfg)]) == 0
    assert len(_read(tmp_path / "o.json")["points"]) == 1


def test_decisions_recomputable(tmp_path):
    out = tmp_path / "r.json"
    run_cli(["verify", "--metric", "sphere", "--n", "3", "--samples", "2", "--seed", "3", "-o", str(out)])
    rep = _read(out)
    ids = [c["check_id"] for c in rep["checks"]]
    assert len(ids) == len(set(ids))
    for check in rep["checks"]:
        assert CheckReport.recompute_status(check) == check["status"]


def test_reports_deterministic(tmp_path):
    texts = []
    for k in range(2):
        out = tmp_path / "r.json"
        run_cli(["verify", "--metric", "randers_wind", "--n", "3", "--samples", "2", "--seed", "9", "-o", str(out)])
        rep = _read(out)
        rep.pop("wall_clock_seconds")
        texts.append(json.dumps(rep, sort_keys=True))
    assert texts[0] == texts[1]


def test_write_report_sorted_and_finite(tmp_path):
    path = tmp_path / "r.json"
    write_report({"b": float("inf"), "a": 1}, path)
    text = path.read_text()
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text)["b"] == "inf"


_junk = st.one_of(st.none(), st.booleans(), st.integers(-3, 3), st.floats(allow_nan=True), st.text(max_size=4), st.lists(st.integers(), max_size=2))
_bad_fields = st.sampled_from(
    [
        ("metric", _junk),
        ("samples", st.fixed_dictionaries({"count": st.integers(-5, 0)})),
        ("samples", _junk),
        ("checks", st.lists(st.text(min_size=1, max_size=5), min_size=1, max_size=3)),
        ("tolerances", st.dictionaries(st.sampled_from(["conclusion", "hypothesis"]), st.one_of(st.integers(-5, 0), st.text(max_size=2)), min_size=1)),
        ("bogus_field", _junk),
    ]
)


@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(st.data())
def test_malformed_configs_exit_2(tmp_path, data):
    key, strategy = data.draw(_bad_fields)
    value = data.draw(strategy)
    cfg = {"metric": {"builtin": "euclidean", "n": 3}, "checks": ["kn-identities"], key: value}
    if key == "checks" and all(c in ALL_CHECKS for c in value):
        return
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    assert validate_config(cfg)
    assert run_cli(["verify", "--config", str(path), "-o", str(tmp_path / "o.json")]) == 2
