"""Command-line entry point: eval, verify, classify and synth."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .connection import connection_data
from .curvature import curvature_summary
from .expr import ExprSyntaxError, IndexOutOfRangeError, UnknownIdentifierError
from .geometric import ALL_CHECKS, DEFAULT_BOX, GEOMETRIC_CHECKS, run_check, sample_points
from .metric import BUILTINS, EvalPoint, InadmissiblePointError, InvalidMetricError, MetricSpec
from .recurrence import classify, synth_scene
from .recurrence.scenes import CONSTRAINTS, SCENE_KINDS, SYMMETRY_CLASSES, InfeasibleScene, SyntheticScene
from .report import FAIL, Tolerances

EXIT_OK, EXIT_FAIL, EXIT_INVALID = 0, 1, 2
CONFIG_KEYS = ("metric", "scene", "samples", "checks", "tolerances", "output")


class ConfigError(ValueError):
    """Invalid run configuration; ``problems`` lists every offending field."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass
class RunConfig:
    metric: dict | None = None
    scene: str | None = None
    samples: dict = field(default_factory=lambda: {"count": 1, "seed": 0, "box": list(DEFAULT_BOX)})
    checks: list | str = "all"
    tolerances: dict = field(default_factory=dict)
    output: str | None = None

    def to_json(self) -> dict:
        d = {"samples": self.samples, "checks": self.checks, "tolerances": self.tolerances}
        for key in ("metric", "scene", "output"):
            if getattr(self, key) is not None:
                d[key] = getattr(self, key)
        return d

    @classmethod
    def from_json(cls, d) -> "RunConfig":
        problems = validate_config(d)
        if problems:
            raise ConfigError(problems)
        samples = dict(d.get("samples", {"count": 1, "seed": 0}))
        if "points" not in samples:
            samples.setdefault("seed", 0)
            samples["box"] = list(samples.get("box", DEFAULT_BOX))
        return cls(
            metric=d.get("metric"),
            scene=d.get("scene"),
            samples=samples,
            checks=d.get("checks", "all"),
            tolerances=dict(d.get("tolerances", {})),
            output=d.get("output"),
        )

    def metric_spec(self) -> MetricSpec:
        return MetricSpec.from_json(self.metric)

    def points(self, n: int) -> list[EvalPoint]:
        s = self.samples
        if "points" in s:
            pts = [EvalPoint(p["x"], p["y"]) for p in s["points"]]
            if any(p.n != n for p in pts):
                raise ConfigError([f"samples.points: every point must have dimension {n}"])
            return pts
        return sample_points(n, int(s["count"]), int(s["seed"]), s["box"])

    def check_ids(self) -> list:
        return list(ALL_CHECKS) if self.checks == "all" else list(self.checks)


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def validate_config(d) -> list[str]:
    """Every schema violation in a config dict, as 'field: message' strings."""
    if not isinstance(d, dict):
        return ["config: must be a JSON object"]
    problems = [f"{k}: unknown field" for k in d if k not in CONFIG_KEYS]
    if ("metric" in d) == ("scene" in d):
        problems.append("metric/scene: exactly one of the two is required")
    if "metric" in d:
        if not isinstance(d["metric"], dict):
            problems.append("metric: must be an object")
        else:
            try:
                MetricSpec.from_json(d["metric"])
            except (InvalidMetricError, ExprSyntaxError, UnknownIdentifierError, IndexOutOfRangeError, TypeError, KeyError) as err:
                problems.append(f"metric: {err}")
    if "scene" in d and not isinstance(d["scene"], str):
        problems.append("scene: must be a file path")
    s = d.get("samples", {"count": 1})
    if not isinstance(s, dict):
        problems.append("samples: must be an object")
    elif "points" in s:
        pts = s["points"]
        if not isinstance(pts, list) or not pts:
            problems.append("samples.points: must be a non-empty list")
        else:
            for k, p in enumerate(pts):
                if not (isinstance(p, dict) and all(isinstance(p.get(c), list) and all(_is_num(v) for v in p[c]) for c in "xy")):
                    problems.append(f"samples.points[{k}]: needs numeric lists x and y")
                elif len(p["x"]) != len(p["y"]) or not any(p["y"]):
                    problems.append(f"samples.points[{k}]: x and y must have equal length and y must be nonzero")
    else:
        if not _is_int(s.get("count")) or s["count"] < 1:
            problems.append("samples.count: must be an integer >= 1")
        if "seed" in s and not _is_int(s["seed"]):
            problems.append("samples.seed: must be an integer")
        if "box" in s:
            box = s["box"]
            if not (isinstance(box, list) and len(box) == 2 and all(_is_num(v) for v in box) and box[0] < box[1]):
                problems.append("samples.box: must be [lo, hi] with lo < hi")
        extra = [k for k in s if k not in ("count", "seed", "box")]
        problems += [f"samples.{k}: unknown field" for k in extra]
    checks = d.get("checks", "all")
    if checks != "all":
        if not isinstance(checks, list) or not checks:
            problems.append("checks: must be \"all\" or a non-empty list of check ids")
        else:
            problems += [f"checks: unknown check id {c!r}" for c in checks if c not in ALL_CHECKS]
            if len(set(map(str, checks))) != len(checks):
                problems.append("checks: duplicate check ids")
    tol = d.get("tolerances", {})
    if not isinstance(tol, dict):
        problems.append("tolerances: must be an object")
    else:
        problems += [f"tolerances.{k}: must be a positive number" for k, v in tol.items() if not (_is_num(v) and v > 0)]
    if "output" in d and not isinstance(d["output"], str):
        problems.append("output: must be a file path")
    return problems


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            d = json.load(fh)
    except OSError as err:
        raise ConfigError([f"config: cannot read {path}: {err.strerror}"]) from None
    except json.JSONDecodeError as err:
        raise ConfigError([f"config: invalid JSON at line {err.lineno}: {err.msg}"]) from None
    return RunConfig.from_json(d)


def save_config(cfg: RunConfig, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(cfg.to_json()))


# ---------------------------------------------------------------------------
# report serialization
# ---------------------------------------------------------------------------


def _plain(v):
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        if v.ndim == 0:
            return _plain(v.item())
        return {"shape": list(v.shape), "data": [_plain(x) for x in v.ravel().tolist()]}
    if isinstance(v, np.generic):
        return _plain(v.item())
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def dumps(obj) -> str:
    return json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n"


def write_report(report: dict, path) -> None:
    """Write a report as JSON with sorted keys; '-' writes to stdout."""
    text = dumps(report)
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _point_summary(spec, p) -> dict:
    s = curvature_summary(spec, p)
    cd = connection_data(spec, p)
    s.update({"spray": cd.G, "N": cd.N, "F": cd.F, "connection_residuals": cd.residuals()})
    return {"x": list(p.x), "y": list(p.y), "status": "ok", "tensors": s}


def _evaluate_points(spec, points) -> list:
    out = []
    for k, p in enumerate(points):
        try:
            out.append({"sample": k, **_point_summary(spec, p)})
        except (InadmissiblePointError, ArithmeticError) as err:
            out.append({"sample": k, "x": list(p.x), "y": list(p.y), "status": "rejected", "reason": str(err)})
    return out


def _source(cfg: RunConfig):
    if cfg.scene is not None:
        try:
            return SyntheticScene.load(cfg.scene), None
        except OSError as err:
            raise ConfigError([f"scene: cannot read {cfg.scene}: {err.strerror}"]) from None
        except (ValueError, json.JSONDecodeError) as err:
            raise ConfigError([f"scene: {err}"]) from None
    spec = cfg.metric_spec()
    return spec, cfg.points(spec.n)


def cmd_eval(cfg: RunConfig) -> tuple[dict, int]:
    if cfg.scene is not None:
        raise ConfigError(["scene: eval needs a metric"])
    spec, points = _source(cfg)
    return {"points": _evaluate_points(spec, points)}, EXIT_OK


def cmd_verify(cfg: RunConfig) -> tuple[dict, int]:
    source, points = _source(cfg)
    ids = cfg.check_ids()
    if isinstance(source, SyntheticScene) and cfg.checks == "all":
        ids = [c for c in ids if c not in GEOMETRIC_CHECKS]
    tol = Tolerances(cfg.tolerances)
    reports = [run_check(cid, source, points, tol).to_json() for cid in ids]
    failed = any(r["status"] == FAIL for r in reports)
    summary = {s: sum(r["status"] == s for r in reports) for s in ("pass", "fail", "not-applicable")}
    return {"checks": reports, "summary": summary}, EXIT_FAIL if failed else EXIT_OK


def cmd_classify(cfg: RunConfig) -> tuple[dict, int]:
    source, points = _source(cfg)
    if source.n < 3:
        raise ConfigError(["metric: classification needs n >= 3"])
    table = classify(source, points, cfg.tolerances, homogeneity=points is not None)
    return {"classification": table}, EXIT_OK


COMMANDS = {"eval": cmd_eval, "verify": cmd_verify, "classify": cmd_classify}


def _metric_arg(value: str, n: int | None) -> dict:
    if os.path.exists(value):
        try:
            with open(value) as fh:
                return json.load(fh)
        except json.JSONDecodeError as err:
            raise ConfigError([f"metric: invalid JSON in {value} at line {err.lineno}: {err.msg}"]) from None
    if value in BUILTINS:
        d = {"builtin": value}
        if n is not None:
            d["n"] = n
        return d
    raise ConfigError([f"metric: {value!r} is neither a file nor a builtin ({', '.join(BUILTINS)})"])


def _config_from_args(args) -> RunConfig:
    d = {}
    if args.config:
        try:
            with open(args.config) as fh:
                d = json.load(fh)
        except OSError as err:
            raise ConfigError([f"config: cannot read {args.config}: {err.strerror}"]) from None
        except json.JSONDecodeError as err:
            raise ConfigError([f"config: invalid JSON at line {err.lineno}: {err.msg}"]) from None
        if not isinstance(d, dict):
            raise ConfigError(["config: must be a JSON object"])
    if args.metric is not None:
        d.pop("scene", None)
        d["metric"] = _metric_arg(args.metric, args.n)
    if getattr(args, "scene", None) is not None:
        d.pop("metric", None)
        d["scene"] = args.scene
    if args.samples is not None or args.seed is not None:
        s = d.get("samples", {}) if "points" not in d.get("samples", {}) else {}
        s.setdefault("count", 1)
        if args.samples is not None:
            s["count"] = args.samples
        if args.seed is not None:
            s["seed"] = args.seed
        d["samples"] = s
    if getattr(args, "checks", None) is not None:
        d["checks"] = "all" if args.checks == "all" else [c for c in args.checks.split(",") if c]
    if args.tol:
        tol = dict(d.get("tolerances", {}))
        for item in args.tol:
            key, sep, val = item.partition("=")
            try:
                tol[key] = float(val) if sep else None
            except ValueError:
                tol[key] = val
        d["tolerances"] = tol
    if args.output is not None:
        d["output"] = args.output
    return RunConfig.from_json(d)


def _synth(args) -> int:
    constraints = tuple(c for c in (args.constraints or "").split(",") if c)
    bad = [c for c in constraints if c not in CONSTRAINTS]
    if bad:
        raise ConfigError([f"constraints: unknown constraint {c!r}" for c in bad])
    try:
        scene = synth_scene(args.n, args.seed, args.symmetry_class, constraints, args.kind)
    except InfeasibleScene as err:
        print(f"finslerlab: infeasible scene: {json.dumps(err.report, sort_keys=True)}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as err:
        raise ConfigError([str(err)]) from None
    text = json.dumps(scene.to_json(), indent=1, sort_keys=True) + "\n"
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.output, "w") as fh:
            fh.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="finslerlab", description="Cartan-connection curvature and recurrence checks.")
    parser.add_argument("--version", action="version", version=f"finslerlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scene=True, checks=False):
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--metric", help="metric JSON file or builtin name")
        p.add_argument("--n", type=int, help="dimension for builtin metrics")
        if scene:
            p.add_argument("--scene", help="synthetic scene JSON file")
        p.add_argument("--samples", type=int, help="number of seeded sample points")
        p.add_argument("--seed", type=int, help="sampler seed")
        if checks:
            p.add_argument("--checks", help="comma-separated check ids or 'all'")
        p.add_argument("--tol", action="append", metavar="NAME=VALUE", help="tolerance override (repeatable)")
        p.add_argument("-o", "--output", help="report path ('-' for stdout)")

    common(sub.add_parser("eval", help="evaluate tensors at sample points"), scene=False)
    common(sub.add_parser("verify", help="run checks on a metric or scene"), checks=True)
    common(sub.add_parser("classify", help="recurrence classification table"))
    sp = sub.add_parser("synth", help="write a synthetic curvature scene")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--class", dest="symmetry_class", default="algebraic", choices=SYMMETRY_CLASSES)
    sp.add_argument("--constraints", default="", help=f"comma-separated subset of {','.join(CONSTRAINTS)}")
    sp.add_argument("--kind", default="hyper_generalized", choices=SCENE_KINDS)
    sp.add_argument("-o", "--output", help="scene path ('-' for stdout)")
    return parser


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code not in (0, None) else EXIT_OK
    try:
        if args.command == "synth":
            return _synth(args)
        cfg = _config_from_args(args)
        start = time.perf_counter()
        body, code = COMMANDS[args.command](cfg)
    except ConfigError as err:
        for problem in err.problems:
            print(f"finslerlab: {problem}", file=sys.stderr)
        return EXIT_INVALID
    except (InvalidMetricError, ExprSyntaxError, UnknownIdentifierError, IndexOutOfRangeError, ValueError) as err:
        print(f"finslerlab: {err}", file=sys.stderr)
        return EXIT_INVALID
    report = {"tool": "finslerlab", "version": __version__, "command": args.command, "config": cfg.to_json(), **body}
    report["wall_clock_seconds"] = round(time.perf_counter() - start, 3)
    try:
        write_report(report, cfg.output)
    except OSError as err:
        print(f"finslerlab: cannot write report: {err.strerror}", file=sys.stderr)
        return EXIT_INVALID
    return code


def main() -> None:
    sys.exit(run_cli())
