"""Scenario runner: reproduces the inequality suites, the symmetrization
experiments, and the Steiner counterexample from JSON scenario configs.

Results go to a fixed-column CSV plus a machine-readable run manifest; exit
code 0 means success, 2 means an acceptance check was falsified, 1 means an
error (malformed config, unsupported body, ...).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

try:
    import jsonschema
except ImportError:  # pragma: no cover
    jsonschema = None

from . import __version__, _core
from .bodies import body_from_descriptor, make_ball, make_ellipsoid, volume
from .errors import BCGError, SchemaError
from .functionals import Weight, b_balls_exact, b_functional, brs_gap
from .ncla import FMat, det_abs, random_fmat
from .quermass import (
    conjecture_eval,
    intersection_inequality_check,
    santalo_case,
    sl_invariance_test,
)
from .randgeom import bp_check
from .scalars import Field
from .selftest import determinant_suite, kernel_cross_check
from .symmetrize import (
    FHyperplane,
    hyperplane_from_config,
    iterate,
    steiner,
    symmetrize_fhyperplane,
)

CSV_COLUMNS = ["scenario_id", "field", "n", "r", "mean", "stderr", "samples",
               "seed", "wall_time_s"]

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "id"],
    "properties": {
        "schema_version": {"const": 1},
        "id": {"type": "string"},
        "field": {"enum": ["R", "C", "H"]},
        "n": {"type": "integer", "minimum": 1},
        "m": {"type": "integer", "minimum": 1},
        "bodies": {"type": "array", "minItems": 1,
                   "items": {"type": "object",
                             "required": ["kind", "field", "n"]}},
        "body": {"type": "object", "required": ["kind", "field", "n"]},
        "weight_r": {"type": "number", "minimum": 0},
        "samples": {"type": "integer", "minimum": 1000},
        "outer_samples": {"type": "integer", "minimum": 1},
        "inner_samples": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "workers": {"type": "integer", "minimum": 1},
        "dual": {"type": "boolean"},
        "matrix": {"type": "array"},
        "hyperplane": {"type": "object", "required": ["type", "normal"]},
        "planes": {"type": "array",
                   "items": {"type": "object",
                             "required": ["type", "normal"]}},
        "rounds": {"type": "integer", "minimum": 1},
        "aspect": {"type": "number", "exclusiveMinimum": 1.0},
    },
}


def load_config(path) -> dict:
    if not path:
        raise SchemaError("this subcommand requires --config PATH")
    text = Path(path).read_text()
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(
            f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}"
        ) from exc
    if jsonschema is not None:
        try:
            jsonschema.validate(cfg, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            loc = "/".join(str(x) for x in exc.absolute_path) or "<root>"
            raise SchemaError(f"{path}: at {loc}: {exc.message}") from exc
    return cfg


def require(cfg: dict, *keys):
    for key in keys:
        if key not in cfg:
            raise SchemaError(f"config is missing required field {key!r}")


class Emitter:
    """Collects result rows and writes the CSV and manifest for one run."""

    def __init__(self, scenario_id: str, out_dir: str):
        self.scenario_id = scenario_id
        self.out_dir = Path(out_dir)
        self.rows: list[dict] = []
        self.results: dict = {}
        self.t0 = time.perf_counter()

    def row(self, quantity: str, mean, stderr=0.0, field="", n="", r="",
            samples=0, seed=0):
        self.rows.append({
            "scenario_id": f"{self.scenario_id}/{quantity}",
            "field": field, "n": n, "r": r,
            "mean": repr(float(mean)), "stderr": repr(float(stderr)),
            "samples": int(samples), "seed": int(seed),
            "wall_time_s": f"{time.perf_counter() - self.t0:.3f}",
        })

    def estimate_row(self, quantity: str, est, field="", n="", r=""):
        self.row(quantity, est.mean, est.stderr, field=field, n=n, r=r,
                 samples=est.n_samples, seed=est.seed)

    def write(self, scenario: dict):
        self.out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = self.out_dir / f"{self.scenario_id}.csv"
        with open(csv_path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
            writer.writeheader()
            writer.writerows(self.rows)
        manifest = {
            "schema_version": 1,
            "scenario": scenario,
            "results": self.results,
            "package_version": __version__,
            "backend": _core.backend_name,
            "wall_time_s": time.perf_counter() - self.t0,
        }
        with open(self.out_dir / f"{self.scenario_id}.manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, default=_jsonable)
        return csv_path


def _jsonable(obj):
    if hasattr(obj, "__dict__"):
        return obj.__dict__
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer, np.floating)):
        return obj.item()
    return str(obj)


def _resolved(cfg: dict, args, key: str, default=None):
    cli_val = getattr(args, key.replace("-", "_"), None)
    if cli_val is not None:
        return cli_val
    if key in cfg:
        return cfg[key]
    return default


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_selftest(args) -> int:
    fields = [Field.from_symbol(args.field)] if args.field else list(Field)
    seed = args.seed if args.seed is not None else 0
    trials = args.samples if args.samples is not None else 1000
    emitter = Emitter(f"selftest-{seed}", args.out)
    ok = True
    for field in fields:
        report = determinant_suite(field, trials=trials, seed=seed)
        ok &= report["passed"]
        for check, err in report["worst"].items():
            emitter.row(f"{field.symbol}/{check}", err, 0.0,
                        field=field.symbol, samples=trials, seed=seed)
            print(f"selftest {field.symbol:>1} {check:<24} "
                  f"max rel err {err:.3e} "
                  f"{'ok' if err <= report['rtol'] else 'FAIL'}")
        kerr = kernel_cross_check(field, seed=seed + 1)
        ok &= kerr <= 1e-10
        emitter.row(f"{field.symbol}/kernel_cross_check", kerr, 0.0,
                    field=field.symbol, samples=200, seed=seed + 1)
        print(f"selftest {field.symbol:>1} {'kernel_cross_check':<24} "
              f"max rel err {kerr:.3e} {'ok' if kerr <= 1e-10 else 'FAIL'}")
        emitter.results[field.symbol] = report
    emitter.write({"experiment": "selftest", "seed": seed, "trials": trials})
    return 0 if ok else 2


def cmd_brs(args) -> int:
    cfg = load_config(args.config)
    require(cfg, "bodies", "weight_r", "samples", "seed")
    bodies = [body_from_descriptor(d) for d in cfg["bodies"]]
    samples = _resolved(cfg, args, "samples")
    seed = _resolved(cfg, args, "seed")
    workers = _resolved(cfg, args, "workers", 1)
    r = cfg["weight_r"]
    emitter = Emitter(cfg["id"], args.out)

    report = brs_gap(bodies, Weight.power(r), samples, seed, workers=workers)
    f, n = bodies[0].field.symbol, bodies[0].n
    emitter.estimate_row("B_K", report["B_K"], field=f, n=n, r=r)
    emitter.row("B_balls", report["B_balls"], 0.0, field=f, n=n, r=r,
                samples=samples, seed=seed)
    emitter.row("gap", report["gap"], report["sigma"], field=f, n=n, r=r,
                samples=samples, seed=seed)
    emitter.results["brs"] = {
        "gap": report["gap"], "sigma": report["sigma"],
        "B_K": report["B_K"].mean, "B_balls": report["B_balls"],
    }
    emitter.write(cfg)
    sig = report["gap"] / report["sigma"] if report["sigma"] else 0.0
    print(f"brs gap = {report['gap']:+.6g} ({sig:+.2f} sigma); "
          f"B_K = {report['B_K'].mean:.6g}, B_balls = {report['B_balls']:.6g}")
    return 0 if report["gap"] >= -3 * report["sigma"] else 2


def cmd_bp_check(args) -> int:
    if args.config:
        cfg = load_config(args.config)
        require(cfg, "bodies", "outer_samples", "inner_samples", "seed")
        bodies = [body_from_descriptor(d) for d in cfg["bodies"]]
    else:
        field = Field.from_symbol(args.field or "C")
        cfg = {"id": f"bp-check-{field.symbol}", "schema_version": 1,
               "outer_samples": 400, "inner_samples": 4000, "seed": 7}
        bodies = [make_ball(field, 2)]
    outer = _resolved(cfg, args, "outer_samples")
    inner = _resolved(cfg, args, "inner_samples")
    seed = _resolved(cfg, args, "seed")
    workers = _resolved(cfg, args, "workers", 1)

    emitter = Emitter(cfg["id"], args.out)
    report = bp_check(bodies, outer, inner, seed, workers=workers)
    f, n = bodies[0].field.symbol, bodies[0].n
    emitter.estimate_row("lhs", report["lhs"], field=f, n=n)
    emitter.estimate_row("rhs", report["rhs"], field=f, n=n)
    emitter.row("ratio", report["ratio"], report["ratio_sigma"], field=f, n=n,
                samples=outer * inner, seed=seed)
    emitter.results["bp_check"] = {k: (v.mean if hasattr(v, "mean") else v)
                                   for k, v in report.items()}
    emitter.write(cfg)
    dev = abs(report["ratio"] - 1.0)
    print(f"bp-check ratio rhs/lhs = {report['ratio']:.6f} "
          f"+- {report['ratio_sigma']:.6f}")
    return 0 if dev <= 3 * report["ratio_sigma"] else 2


def cmd_symmetrize(args) -> int:
    cfg = load_config(args.config)
    require(cfg, "body", "samples", "seed")
    body = body_from_descriptor(cfg["body"])
    samples = _resolved(cfg, args, "samples")
    seed = _resolved(cfg, args, "seed")
    workers = _resolved(cfg, args, "workers", 1)
    emitter = Emitter(cfg["id"], args.out)
    field, n = body.field, body.n

    ok = True
    if "hyperplane" in cfg:
        plane = hyperplane_from_config(field, cfg["hyperplane"])
        if isinstance(plane, FHyperplane):
            sym = symmetrize_fhyperplane(body, plane, seed=seed)
        else:
            sym = steiner(body, plane)
        v0 = volume(body, samples=samples, seed=seed, workers=workers,
                    method="mc")
        v1 = volume(sym, samples=samples, seed=seed + 1, workers=workers,
                    method="mc")
        diff = v1.mean - v0.mean
        sigma = math.hypot(v0.stderr, v1.stderr)
        emitter.estimate_row("volume_before", v0, field=field.symbol, n=n)
        emitter.estimate_row("volume_after", v1, field=field.symbol, n=n)
        emitter.row("volume_diff", diff, sigma, field=field.symbol, n=n,
                    samples=samples, seed=seed)
        ok &= abs(diff) <= 3 * sigma
        print(f"symmetrize volume {v0.mean:.6g} -> {v1.mean:.6g} "
              f"(diff {diff:+.3g}, {abs(diff)/sigma if sigma else 0:.2f} sigma)")
        emitter.results["conservation"] = {"diff": diff, "sigma": sigma}

    if "planes" in cfg and "rounds" in cfg:
        planes = [hyperplane_from_config(field, d) for d in cfg["planes"]]
        trace = iterate(body, planes, cfg["rounds"], seed=seed)
        for rec in trace:
            emitter.row(f"round_{rec['round']}/defect", rec["defect"],
                        field=field.symbol, n=n, samples=samples, seed=seed)
            emitter.row(f"round_{rec['round']}/volume", rec["volume"],
                        rec["volume_stderr"], field=field.symbol, n=n,
                        samples=samples, seed=seed)
        emitter.results["trace"] = trace
        print(f"iterate: defect {trace[0]['defect']:.4g} -> "
              f"{trace[-1]['defect']:.4g} over {cfg['rounds']} rounds")

    emitter.write(cfg)
    return 0 if ok else 2


def cmd_quermass(args) -> int:
    cfg = load_config(args.config)
    require(cfg, "body", "m", "dual", "outer_samples", "inner_samples", "seed")
    body = body_from_descriptor(cfg["body"])
    field = body.field
    seed = _resolved(cfg, args, "seed")
    workers = _resolved(cfg, args, "workers", 1)
    if "matrix" in cfg:
        g = FMat.from_entries(field, cfg["matrix"])
        g = g.scale(det_abs(g) ** (-1.0 / g.rows))
    else:
        rng = np.random.default_rng(seed + 999)
        g = random_fmat(field, body.n, body.n, rng)
        g = g.scale(det_abs(g) ** (-1.0 / body.n))
    report = sl_invariance_test(body, cfg["m"], g, cfg["dual"],
                                cfg["outer_samples"], cfg["inner_samples"],
                                seed, workers=workers)
    emitter = Emitter(cfg["id"], args.out)
    emitter.estimate_row("value_K", report["value_K"], field=field.symbol,
                         n=body.n)
    emitter.estimate_row("value_gK", report["value_gK"], field=field.symbol,
                         n=body.n)
    emitter.row("diff", report["diff"], report["sigma"], field=field.symbol,
                n=body.n, samples=cfg["outer_samples"], seed=seed)
    emitter.results["sl_invariance"] = {
        "diff": report["diff"], "sigma": report["sigma"], "dual": cfg["dual"],
    }
    emitter.write(cfg)
    print(f"quermass ({'dual' if cfg['dual'] else 'affine'}) diff = "
          f"{report['diff']:+.4g} ({report['diff_sigmas']:+.2f} sigma)")
    return 0 if abs(report["diff"]) <= 3 * report["sigma"] else 2


def cmd_intersection(args) -> int:
    cfg = load_config(args.config)
    require(cfg, "bodies", "outer_samples", "inner_samples", "seed")
    bodies = [body_from_descriptor(d) for d in cfg["bodies"]]
    seed = _resolved(cfg, args, "seed")
    workers = _resolved(cfg, args, "workers", 1)
    report = intersection_inequality_check(
        bodies, cfg["outer_samples"], cfg["inner_samples"], seed,
        workers=workers)
    emitter = Emitter(cfg["id"], args.out)
    f, n = bodies[0].field.symbol, bodies[0].n
    emitter.estimate_row("lhs", report["lhs"], field=f, n=n)
    emitter.estimate_row("rhs", report["rhs"], field=f, n=n)
    emitter.row("margin", report["margin"], report["sigma"], field=f, n=n,
                samples=cfg["outer_samples"] * cfg["inner_samples"], seed=seed)
    emitter.results["intersection"] = {
        "margin": report["margin"], "sigma": report["sigma"],
        "margin_sigmas": report["margin_sigmas"],
    }
    emitter.write(cfg)
    print(f"intersection margin = {report['margin']:+.6g} "
          f"({report['margin_sigmas']:+.2f} sigma)")
    return 0 if report["margin"] >= -3 * report["sigma"] else 2


def cmd_santalo(args) -> int:
    cfg = load_config(args.config)
    require(cfg, "body", "outer_samples", "seed")
    body = body_from_descriptor(cfg["body"])
    seed = _resolved(cfg, args, "seed")
    workers = _resolved(cfg, args, "workers", 1)
    report = santalo_case(body, cfg["outer_samples"], seed, workers=workers)
    emitter = Emitter(cfg["id"], args.out)
    f, n = body.field.symbol, body.n
    emitter.estimate_row("identity_lhs", report["identity_lhs"], field=f, n=n)
    emitter.estimate_row("identity_rhs", report["identity_rhs"], field=f, n=n)
    emitter.row("residual_sigmas", report["residual_sigmas"], 0.0, field=f,
                n=n, samples=cfg["outer_samples"], seed=seed)
    emitter.row("ineq_margin", report["margin"], report["sigma"], field=f,
                n=n, samples=cfg["outer_samples"], seed=seed)
    emitter.results["santalo"] = {
        "residual_sigmas": report["residual_sigmas"],
        "margin_sigmas": report["margin_sigmas"],
    }
    emitter.write(cfg)
    print(f"santalo identity residual {report['residual_sigmas']:+.2f} sigma; "
          f"inequality margin {report['margin_sigmas']:+.2f} sigma")
    ok = (abs(report["residual_sigmas"]) <= 3
          and report["margin"] >= -3 * report["sigma"])
    return 0 if ok else 2


def cmd_conjecture(args) -> int:
    cfg = load_config(args.config)
    require(cfg, "body", "m", "outer_samples", "seed")
    body = body_from_descriptor(cfg["body"])
    seed = _resolved(cfg, args, "seed")
    workers = _resolved(cfg, args, "workers", 1)
    report = conjecture_eval(body, cfg["m"], cfg["outer_samples"], seed,
                             workers=workers)
    emitter = Emitter(cfg["id"], args.out)
    f, n = body.field.symbol, body.n
    emitter.estimate_row("conj_lhs", report["conj_lhs"], field=f, n=n)
    emitter.estimate_row("conj_rhs", report["conj_rhs"], field=f, n=n)
    emitter.row("conj_margin_sigmas", report["conj_margin_sigmas"], 0.0,
                field=f, n=n, samples=cfg["outer_samples"], seed=seed)
    if "iso_lhs" in report:
        emitter.estimate_row("iso_lhs", report["iso_lhs"], field=f, n=n)
        emitter.estimate_row("iso_rhs", report["iso_rhs"], field=f, n=n)
    emitter.results["conjecture"] = {
        "tag": "EXPLORATION",
        "conj_margin_sigmas": report["conj_margin_sigmas"],
    }
    emitter.write(cfg)
    print(f"conjecture (exploration): margin {report['conj_margin_sigmas']:+.2f} "
          "sigma -- never an acceptance gate")
    return 0


def run_counterexample(aspect: float, weight_r: float, samples: int,
                       seed: int, workers: int = 1,
                       scan_if_insignificant: bool = True) -> dict:
    """The Steiner counterexample experiment in C^2.

    E_a = {|z1|^2/a^2 + a^2 |z2|^2 <= 1} has unit determinant, so
    B(E_a, E_a) equals the centered-ball value exactly.  Steiner
    symmetrization w.r.t. the real hyperplane with unit normal mixing
    Re z1 and Re z2 equally must push B strictly above that value, while
    symmetrization in the complex hyperplane {z1 = 0} must not (the
    control)."""
    field = Field.COMPLEX
    a = float(aspect)
    weight = Weight.power(weight_r)
    b_exact = b_balls_exact(2, 2, weight_r)
    e_a = make_ellipsoid(None, FMat.diag(field, [1.0 / a**2, a**2]))

    def steiner_estimate(theta: float, nsamp: int, sd: int):
        # packed coordinates are (Re z1, Re z2, Im z1, Im z2)
        u = np.array([math.cos(theta), math.sin(theta), 0.0, 0.0])
        sym = steiner(e_a, u)
        return b_functional([sym, sym], weight, nsamp, sd, workers=workers)

    theta = math.pi / 4.0
    est = steiner_estimate(theta, samples, seed)
    delta = est.mean - b_exact
    sig = delta / est.stderr if est.stderr else math.inf

    scan = None
    if sig < 3.0 and scan_if_insignificant:
        scan = []
        for cand in np.linspace(math.pi / 16, math.pi / 2 * 15 / 16, 8):
            cand_est = steiner_estimate(float(cand), max(samples // 20, 10_000),
                                        seed + 17)
            scan.append((float(cand), cand_est.mean - b_exact,
                         cand_est.stderr))
        theta = max(scan, key=lambda rec: rec[1])[0]
        est = steiner_estimate(theta, samples, seed + 29)
        delta = est.mean - b_exact
        sig = delta / est.stderr if est.stderr else math.inf

    plane = FHyperplane(field, np.array([[1.0, 0, 0, 0], [0.0, 0, 0, 0]]))
    control_body = symmetrize_fhyperplane(e_a, plane, seed=seed)
    control = b_functional([control_body, control_body], weight, samples,
                           seed + 1, workers=workers)
    control_delta = control.mean - b_exact
    control_sig = (control_delta / control.stderr if control.stderr
                   else 0.0)

    return {
        "aspect": a,
        "weight_r": weight_r,
        "theta": theta,
        "B_exact": b_exact,
        "B_steiner": est,
        "delta": delta,
        "delta_sigmas": sig,
        "control": control,
        "control_delta": control_delta,
        "control_sigmas": control_sig,
        "scan": scan,
    }


def cmd_counterexample(args) -> int:
    aspect = args.aspect if args.aspect is not None else math.sqrt(3.0)
    weight_r = args.weight_r if args.weight_r is not None else 2.0
    samples = args.samples if args.samples is not None else 10_000_000
    seed = args.seed if args.seed is not None else 42
    workers = args.workers if args.workers is not None else 1

    report = run_counterexample(aspect, weight_r, samples, seed,
                                workers=workers)
    emitter = Emitter(f"counterexample-a{aspect:.4g}-r{weight_r:g}-s{seed}",
                      args.out)
    emitter.row("B_exact", report["B_exact"], 0.0, field="C", n=2,
                r=weight_r, samples=samples, seed=seed)
    emitter.estimate_row("B_steiner", report["B_steiner"], field="C", n=2,
                         r=weight_r)
    emitter.row("delta", report["delta"], report["B_steiner"].stderr,
                field="C", n=2, r=weight_r, samples=samples, seed=seed)
    emitter.estimate_row("B_control", report["control"], field="C", n=2,
                         r=weight_r)
    emitter.row("control_delta", report["control_delta"],
                report["control"].stderr, field="C", n=2, r=weight_r,
                samples=samples, seed=seed)
    emitter.results["counterexample"] = {
        "delta": report["delta"], "delta_sigmas": report["delta_sigmas"],
        "control_sigmas": report["control_sigmas"], "theta": report["theta"],
    }
    emitter.write({"experiment": "counterexample", "aspect": aspect,
                   "weight_r": weight_r, "samples": samples, "seed": seed,
                   "workers": workers})
    print(f"counterexample: B(S_H E, S_H E) = {report['B_steiner'].mean:.6f} "
          f"vs ball value {report['B_exact']:.6f}; "
          f"delta = {report['delta']:+.6f} ({report['delta_sigmas']:+.1f} sigma)")
    print(f"control (complex hyperplane): delta = "
          f"{report['control_delta']:+.6f} ({report['control_sigmas']:+.2f} sigma)")
    ok = report["delta_sigmas"] >= 3.0 and report["control_sigmas"] <= 3.0
    return 0 if ok else 2


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bcg",
        description="Convex-geometry experiments over R, C, and H",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", help="scenario config (JSON)")
        p.add_argument("--samples", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--out", default="results", help="output directory")
        p.add_argument("--field", choices=["R", "C", "H"])

    handlers = {}
    for name, fn, needs_config in [
        ("selftest", cmd_selftest, False),
        ("brs", cmd_brs, True),
        ("bp-check", cmd_bp_check, True),
        ("symmetrize", cmd_symmetrize, True),
        ("quermass", cmd_quermass, True),
        ("intersection", cmd_intersection, True),
        ("santalo", cmd_santalo, True),
        ("counterexample", cmd_counterexample, False),
        ("conjecture", cmd_conjecture, True),
    ]:
        p = sub.add_parser(name)
        common(p, config=needs_config or name == "bp-check")
        if name == "counterexample":
            p.add_argument("--aspect", type=float, help="semi-axis ratio a > 1")
            p.add_argument("--weight-r", type=float, dest="weight_r")
        handlers[name] = fn

    args = parser.parse_args(argv)
    try:
        return handlers[args.command](args)
    except SchemaError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except BCGError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
