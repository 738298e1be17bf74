"""Command-line front end.

Every subcommand reads a flat JSON config (``--config``), overlays command-line
flags, validates the result against its schema and runs the experiment.  The
JSON report goes to stdout (``bessel`` prints the bare value unless ``--json``)
and, with ``--out``, CSV tables plus ``report.json`` are written atomically.

Exit codes: 0 all checks pass, 1 a check failed, 2 usage or config error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import adversarial, battery, bessel, bounds, finite_oracle, gaussian, stochastic
from . import propagator as prop
from .errors import ConstructionError, DomainError, PreconditionError
from .report import ExperimentReport, atomic_write, format_float, write_csv

THREADS_ENV = "CHAINLAB_THREADS"

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _floats(text) -> list[float]:
    if isinstance(text, str):
        return [float(v) for v in text.split(",") if v.strip()]
    return [float(v) for v in text]


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    low = str(text).lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _int(v) -> int:
    if isinstance(v, bool) or (isinstance(v, float) and not v.is_integer()):
        raise ValueError(f"not an integer: {v!r}")
    return int(v)


_EPS = ("eps", float, prop.DEFAULT_EPS, "light-cone truncation tolerance")

# subcommand -> [(key, parser, default, help)]
SCHEMAS: dict[str, list[tuple[str, Callable, Any, str]]] = {
    "bessel": [
        ("n", _int, 0, "order"),
        ("t", float, 0.0, "argument"),
        ("n_max", _int, -1, "also emit the row J_0..J_n_max when >= 0"),
        ("tol", float, 1e-11, "allowed distance from the quadrature oracle"),
    ],
    "propagate": [
        ("omega1", float, 1.0, "coupling frequency"),
        ("t", float, 10.0, "time"),
        _EPS,
        ("initial", str, "delta", "delta | random | file"),
        ("q0_file", str, "", "JSON window {offset, values} when initial=file"),
        ("support", _int, 50, "half-width of random data"),
        ("seed", _int, 0, "seed for random data"),
        ("lo", _int, -20, "first output site"),
        ("hi", _int, 20, "last output site"),
        ("velocity", _bool, False, "also output p(t)"),
    ],
    "oracle": [
        ("omega1", float, 1.0, "coupling frequency"),
        ("t", float, 20.0, "time"),
        ("dt_scale", float, 2.5e-4, "Verlet step times omega1"),
        ("size", _int, finite_oracle.DEFAULT_SIZE, "chain length"),
        ("boundary", str, "fixed_zero", "fixed_zero | periodic"),
        ("support", _int, 50, "half-width of the random data"),
        ("inner_half_width", _int, -1, "compared sites (-1: size // 4)"),
        ("seed", _int, 0, "seed for the random data"),
        ("tol", float, 1e-6, "agreement tolerance"),
        _EPS,
    ],
    "bounds": [
        ("omega1", float, 0.5, "coupling frequency"),
        ("t_grid", _floats, [1.0, 10.0, 100.0], "envelope times"),
        ("n_samples", _int, 100, "random unit-sup samples"),
        ("seed", _int, 0, "sampling seed"),
        ("distribution", str, "rademacher", "rademacher | uniform"),
        ("eval_half_width", _int, 16, "evaluated sites around 0"),
        ("cos_t_grid", _floats, [1e2, 1e3, 1e4], "cos-norm scan times"),
        ("slope_tol", float, 0.03, "cos-norm slope tolerance around 1/2"),
        _EPS,
    ],
    "adversarial": [
        ("T", float, 1e4, "target time"),
        ("omega1", float, 0.5, "coupling frequency"),
        ("a", float, adversarial.DEFAULT_A, "support window start, in units of 2 omega1 T"),
        ("b", float, adversarial.DEFAULT_B, "support window end, in units of 2 omega1 T"),
        ("sign", _int, 1, "+1 or -1"),
        ("ratio_tol", float, -1.0, "main-term ratio tolerance (-1: 5 / T)"),
        ("c_floor", float, 0.01, "required q0(T) / sqrt(T)"),
        ("multiscale_count", _int, 0, "also build a multi-bump plan with this many times (0: off)"),
        ("T1", float, 1e3, "first multi-bump time"),
    ],
    "ensemble": [
        ("experiment", str, "all", "all | covariance | normality | sup_growth"),
        ("distribution", str, "rademacher", "rademacher | uniform_pm1 | gaussian"),
        ("sigma2", float, 1.0, "site variance"),
        ("n_samples", _int, 10_000, "samples for covariance and normality"),
        ("sup_samples", _int, 2000, "samples for the sup-growth run"),
        ("seed", _int, 0, "ensemble seed"),
        ("window_half_width", _int, -1, "sampled half-width (-1: light-cone minimum)"),
        ("omega1", float, 0.5, "coupling frequency"),
        ("ts", _floats, [10.0, 200.0], "covariance base times"),
        ("s_grid", _floats, [0.0, 1.0, 2.0, 5.0], "covariance lags"),
        ("n_se", float, 4.0, "covariance tolerance in standard errors"),
        ("limit_from", float, 200.0, "base time from which the limit form is checked"),
        ("ks_t", float, 500.0, "normality time"),
        ("thresholds", _floats, [2.0], "sup thresholds in units of sigma"),
        ("horizons", _floats, [10.0, 100.0, 1000.0], "sup horizons"),
        ("dt", float, 0.5, "sup time grid spacing"),
        _EPS,
    ],
    "gaussian": [
        ("a", float, 1.0, "threshold"),
        ("delta", float, 0.1, "total off-diagonal budget"),
        ("N", _int, 20, "grid points"),
        ("n_samples", _int, 5000, "sup samples"),
        ("seed", _int, 0, "seed"),
        ("sampler", str, "auto", "auto | series | exact"),
        ("cov_s", _floats, [0.0, 1.0, 2.0, 5.0, 10.0], "lags for the series covariance check"),
        ("cov_samples", _int, 10_000, "series paths for the covariance check"),
    ],
}


def _battery_schema():
    out = []
    for f in dataclasses.fields(battery.BatteryConfig):
        default = f.default
        if isinstance(default, tuple):
            parse = (lambda v: tuple(v.split(",")) if isinstance(v, str) else tuple(v)) \
                if f.name == "skip" else (lambda v: tuple(_floats(v)))
            out.append((f.name, parse, default, "comma-separated list"))
        elif isinstance(default, int):
            out.append((f.name, _int, default, ""))
        else:
            out.append((f.name, float, default, ""))
    return out


SCHEMAS["suite"] = _battery_schema()


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags take precedence")
    p.add_argument("--out", help="directory for CSV tables and report.json")
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker threads (default: ${THREADS_ENV} or 1)")
    p.add_argument("--json", action="store_true", help="print the JSON report (bessel only)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chainlab", description=__doc__.splitlines()[0],
                                     allow_abbrev=False)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, schema in SCHEMAS.items():
        p = sub.add_parser(name, allow_abbrev=False)
        _add_common(p)
        for key, _, default, helptext in schema:
            flag = "--" + key.replace("_", "-")
            p.add_argument(flag, dest=key, default=None,
                           help=f"{helptext} [default: {default}]".strip())
    return parser


def resolve_config(command: str, args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then flags; unknown keys raise :class:`UsageError`."""
    schema = {k: (parse, default) for k, parse, default, _ in SCHEMAS[command]}
    cfg = {k: d for k, (_, d) in schema.items()}
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(doc, dict):
            raise UsageError("config must be a JSON object")
        unknown = sorted(set(doc) - set(schema))
        if unknown:
            raise UsageError(f"unknown config keys for {command}: {', '.join(unknown)}")
        for k, v in doc.items():
            cfg[k] = _parse(k, schema[k][0], v)
    for k in schema:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = _parse(k, schema[k][0], v)
    return cfg


def _parse(key, parse, value):
    try:
        return parse(value)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad value for {key}: {value!r} ({exc})") from exc


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get(THREADS_ENV, "")
    try:
        return max(1, int(env)) if env else 1
    except ValueError as exc:
        raise UsageError(f"{THREADS_ENV} must be an integer, got {env!r}") from exc


# --- subcommand runners -----------------------------------------------------

def run_bessel(cfg: dict, threads: int) -> ExperimentReport:
    n, t = cfg["n"], cfg["t"]
    value = bessel.bessel_j(n, t)
    oracle = bessel.bessel_j_oracle(n, t)
    rep = ExperimentReport("bessel", config=cfg)
    rep.metrics.update(value=value, oracle=oracle, abs_diff=abs(value - oracle))
    rep.check("oracle", f"|J_n(t) - quadrature| <= {cfg['tol']}", abs(value - oracle),
              abs(value - oracle) <= cfg["tol"])
    if cfg["n_max"] >= 0:
        row = bessel.bessel_row(cfg["n_max"], t).values
        rep.tables["bessel_row"] = (["n", "J_n"], list(zip(range(row.size), row.tolist())))
    return rep


def _initial_window(cfg: dict) -> prop.LatticeWindow:
    kind = cfg["initial"]
    if kind == "delta":
        return prop.LatticeWindow.delta(0)
    if kind == "random":
        rng = np.random.default_rng(np.random.SeedSequence([cfg["seed"]]))
        w = cfg["support"]
        return prop.LatticeWindow(-w, rng.uniform(-1.0, 1.0, 2 * w + 1))
    if kind == "file":
        try:
            return prop.LatticeWindow.from_dict(json.loads(Path(cfg["q0_file"]).read_text()))
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            raise UsageError(f"cannot read q0_file: {exc}") from exc
    raise UsageError(f"initial must be delta, random or file, got {kind!r}")


def run_propagate(cfg: dict, threads: int) -> ExperimentReport:
    q0 = _initial_window(cfg)
    lo, hi = cfg["lo"], cfg["hi"]
    if hi < lo:
        raise UsageError("hi must be >= lo")
    q, p = prop.evolve_state(q0, None, cfg["omega1"], cfg["t"], cfg["eps"], (lo, hi))
    rep = ExperimentReport("propagate", config=cfg)
    sup, l2 = q.inf_norm(), q0.l2_norm()
    rep.metrics.update(sup_q=sup, l2_q0=l2,
                       half_width=prop.light_cone_window(cfg["omega1"], cfg["t"], cfg["eps"]))
    rep.check("l2_bound", "|q(t)|_inf <= |q(0)|_2 (1 + 1e-9) + eps |q(0)|_inf", sup,
              sup <= l2 * (1 + 1e-9) + cfg["eps"] * q0.inf_norm())
    if cfg["velocity"]:
        rows = list(zip(q.indices.tolist(), q.values.tolist(), p.values.tolist()))
        rep.tables["propagate"] = (["site", "q", "p"], rows)
    else:
        rep.tables["propagate"] = (["site", "q"], list(zip(q.indices.tolist(), q.values.tolist())))
    return rep


def run_oracle(cfg: dict, threads: int) -> ExperimentReport:
    rng = np.random.default_rng(np.random.SeedSequence([cfg["seed"]]))
    w = cfg["support"]
    q0 = prop.LatticeWindow(-w, rng.uniform(-1.0, 1.0, 2 * w + 1))
    inner = cfg["inner_half_width"] if cfg["inner_half_width"] >= 0 else None
    rep = finite_oracle.cross_validate(q0, cfg["omega1"], cfg["t"], cfg["dt_scale"] / cfg["omega1"],
                                       cfg["size"], cfg["boundary"], inner, cfg["tol"], cfg["eps"])
    rep.config = {**cfg, "module": rep.config}
    return rep


def run_bounds(cfg: dict, threads: int) -> ExperimentReport:
    env = bounds.verify_upper_bound(cfg["n_samples"], cfg["omega1"], cfg["t_grid"], cfg["seed"],
                                    cfg["eps"], cfg["distribution"], cfg["eval_half_width"])
    cos = bounds.cos_norm_scan(cfg["omega1"], cfg["cos_t_grid"], cfg["eps"],
                               slope_tol=cfg["slope_tol"])
    g = bounds.solve_gamma()
    rep = ExperimentReport("bounds", config=cfg)
    rep.check("gamma_residual", "|exp(1/g)/g - 1/e| <= 1e-12", g.residual, abs(g.residual) <= 1e-12)
    for sub in (env, cos):
        for chk in sub.assertions:
            rep.check(f"{sub.experiment}:{chk.name}", chk.relation, chk.observed, chk.passed)
        rep.metrics.update({f"{sub.experiment}:{k}": v for k, v in sub.metrics.items()})
        rep.tables.update(sub.tables)
    return rep


def run_adversarial(cfg: dict, threads: int) -> ExperimentReport:
    if cfg["sign"] not in (1, -1):
        raise UsageError("sign must be +1 or -1")
    plan = adversarial.build_support_set(cfg["T"], cfg["omega1"], cfg["a"], cfg["b"], cfg["sign"])
    tol = None if cfg["ratio_tol"] < 0 else cfg["ratio_tol"]
    rep = adversarial.measure_growth(plan, tol)
    rep.config = {**cfg, "module": rep.config}
    rep.metrics["plan_digest"] = plan.digest()
    rep.check("c_floor", f"q0(T) / sqrt(T) >= {cfg['c_floor']}", rep.metrics["sqrt_ratio"],
              plan.sign * rep.metrics["sqrt_ratio"] >= cfg["c_floor"])
    rep.tables["growth"] = (["T", "q0_T", "sqrt_ratio", "main_term", "main_term_ratio"],
                            [(cfg["T"], rep.metrics["q0_T"], rep.metrics["sqrt_ratio"],
                              plan.main_term, rep.metrics["main_term_ratio"])])
    rep.documents["plan.json"] = plan.summary()
    if cfg["multiscale_count"] > 0:
        _, multi, mrep = adversarial.build_multiscale(cfg["T1"], cfg["multiscale_count"],
                                                      cfg["omega1"], a=cfg["a"], b=cfg["b"])
        for chk in mrep.assertions:
            rep.check(f"multiscale:{chk.name}", chk.relation, chk.observed, chk.passed)
        rep.metrics["multiscale_Ts"] = mrep.metrics["Ts"]
        rep.metrics["multiscale_q0"] = mrep.metrics["q0_values"]
        rep.tables["multiscale"] = mrep.tables["multiscale"]
        rep.documents["multiscale_plan.json"] = {"Ts": multi.Ts, "c": multi.c,
                                                 "plans": mrep.metrics["plans"]}
    return rep


def run_ensemble(cfg: dict, threads: int) -> ExperimentReport:
    which = cfg["experiment"]
    if which not in ("all", "covariance", "normality", "sup_growth"):
        raise UsageError(f"unknown ensemble experiment {which!r}")
    om, eps = cfg["omega1"], cfg["eps"]

    def spec(n, t_max):
        w = cfg["window_half_width"]
        if w < 0:
            w = stochastic.required_half_width(om, t_max, eps)
        return stochastic.EnsembleSpec(cfg["distribution"], cfg["sigma2"], n, cfg["seed"], w)

    subs = []
    if which in ("all", "covariance"):
        sp = spec(cfg["n_samples"], max(cfg["ts"]) + max(cfg["s_grid"]))
        subs.append(stochastic.covariance_experiment(sp, om, cfg["ts"], cfg["s_grid"], cfg["n_se"],
                                                     cfg["limit_from"], eps))
    if which in ("all", "normality"):
        subs.append(stochastic.normality_check(spec(cfg["n_samples"], cfg["ks_t"]), cfg["ks_t"],
                                               om, eps))
    if which in ("all", "sup_growth"):
        sp = spec(cfg["sup_samples"], max(cfg["horizons"]))
        sd = math.sqrt(cfg["sigma2"])
        subs.append(stochastic.sup_growth_mc(sp, om, [a * sd for a in cfg["thresholds"]],
                                             cfg["horizons"], cfg["dt"], eps))
    rep = ExperimentReport("ensemble", config=cfg)
    for sub in subs:
        for chk in sub.assertions:
            rep.check(f"{sub.experiment}:{chk.name}", chk.relation, chk.observed, chk.passed)
        rep.metrics.update({f"{sub.experiment}:{k}": v for k, v in sub.metrics.items()})
        rep.tables.update(sub.tables)
    return rep


def run_gaussian(cfg: dict, threads: int) -> ExperimentReport:
    spec = gaussian.GaussianGridSpec.build(cfg["a"], cfg["delta"], cfg["N"])
    rep = gaussian.sup_probability_mc(spec, cfg["n_samples"], cfg["seed"], cfg["sampler"])
    rep.config = {**cfg, "module": rep.config}
    s = np.asarray(cfg["cov_s"], dtype=float)
    if s.size:
        x = gaussian.sample_X_batch(s, math.ceil(float(np.abs(s).max())) + gaussian.TRUNC_MARGIN,
                                    cfg["seed"] + 1, cfg["cov_samples"])
        rows = []
        for j, sj in enumerate(s):
            z = (x[:, j] - x[:, j].mean()) * (x[:, 0] - x[:, 0].mean())
            emp = float(z.sum() / (z.size - 1))
            se = float(z.std(ddof=1) / math.sqrt(z.size))
            j0 = bessel.bessel_j(0, sj - s[0])
            rows.append((sj, emp, j0))
            rep.check(f"cov s={sj}", "|cov(X(s), X(s_0)) - J0(s - s_0)| <= 4 SE",
                      abs(emp - j0), abs(emp - j0) <= 4 * se)
        rep.tables["gaussian_cov"] = (["s", "empirical_cov", "J0"], rows)
    return rep


def run_suite(cfg: dict, threads: int) -> ExperimentReport:
    unknown = sorted(set(cfg.get("skip", ())) - set(battery.CHECKS))
    if unknown:
        raise UsageError(f"unknown checks in skip: {', '.join(unknown)}")
    return battery.run_battery(battery.BatteryConfig(**cfg), threads)


RUNNERS = {
    "bessel": run_bessel,
    "propagate": run_propagate,
    "oracle": run_oracle,
    "bounds": run_bounds,
    "adversarial": run_adversarial,
    "ensemble": run_ensemble,
    "gaussian": run_gaussian,
    "suite": run_suite,
}


def _emit(rep: ExperimentReport, out: str | None) -> None:
    if not out:
        return
    root = Path(out)
    for name in sorted(rep.tables):
        header, rows = rep.tables[name]
        write_csv(root / f"{name}.csv", header, rows)
        rep.artifact_paths.append(f"{name}.csv")
    for name, doc in sorted(rep.documents.items()):
        atomic_write(root / name, json.dumps(doc, indent=2) + "\n")
        rep.artifact_paths.append(name)
    rep.artifact_paths.append("report.json")
    atomic_write(root / "report.json", rep.to_json() + "\n")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args.command, args)
        threads = _threads(args)
        rep = RUNNERS[args.command](cfg, threads)
        _emit(rep, args.out)
    except (UsageError, DomainError) as exc:
        print(f"chainlab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PreconditionError, ConstructionError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"chainlab {args.command}: numerical failure: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return EXIT_NUMERIC
    if args.command == "bessel" and not args.json:
        print(format_float(rep.metrics["value"]))
    else:
        print(rep.to_json())
    for a in rep.failures():
        print(f"FAILED {a.name}: {a.relation} (observed {a.observed})", file=sys.stderr)
    return EXIT_OK if rep.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
