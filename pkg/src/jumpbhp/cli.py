"""Command line entry point: one subcommand per experiment.

Every run reads a YAML config (the shipped default for the subcommand when
``--config`` is omitted), writes ``report.json`` plus CSV tables to
``--out`` and exits with

    0  every verdict passed
    1  some verdict failed
    2  invalid command line or config
    3  a quadrature accuracy error
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from . import __version__
from .errors import AccuracyError, ParameterError
from .geometry import DomainShape
from .kernels import Params
from .samplers import StepPolicy

SUBCOMMANDS = ("selftest", "fraclap", "exit", "levysystem", "scaling", "harnack", "carleson", "bhp", "lowerbound")
REPORT_VERSION = 1
EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_ACCURACY = 0, 1, 2, 3

_TOP_KEYS = {"params", "domain", "policy", "n", "seed", "workers", "options"}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------

def default_config_text(kind: str) -> str:
    return resources.files("jumpbhp").joinpath("configs", f"{kind}.yaml").read_text(encoding="utf-8")


def load_config(kind: str, path: Optional[str]) -> dict:
    text = Path(path).read_text(encoding="utf-8") if path else default_config_text(kind)
    cfg = yaml.safe_load(text) or {}
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a mapping")
    unknown = set(cfg) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    return cfg


def _build(cls, block, what):
    try:
        return cls(**(block or {}))
    except TypeError as exc:
        raise ConfigError(f"bad {what} block: {exc}") from None
    except ParameterError as exc:
        raise ConfigError(f"bad {what} block: {exc}") from None


def build_params(cfg) -> Params:
    return _build(Params, cfg.get("params"), "params")


def build_domain(cfg) -> DomainShape:
    return _build(DomainShape, cfg.get("domain"), "domain")


def build_policy(cfg) -> StepPolicy:
    return _build(StepPolicy, cfg.get("policy"), "policy")


def _options(cfg, allowed):
    opts = dict(cfg.get("options") or {})
    unknown = set(opts) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown options: {sorted(unknown)}")
    return opts


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _cell(v):
    if isinstance(v, (list, tuple, np.ndarray)):
        return ";".join(_cell(x) for x in v)
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, rows, columns=None):
    rows = list(rows)
    if columns is None:
        columns = []
        for r in rows:
            for k in r:
                if k not in columns:
                    columns.append(k)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_cell(r.get(c, "")) for c in columns])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    return obj


def write_json(path: Path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# subcommands; each returns (passed, report dict, {csv name: rows})
# ---------------------------------------------------------------------------

def run_selftest(cfg, seed, workers):
    from .selftest import run_checks

    opts = _options(cfg, {"n_paths", "n_increments"})
    checks = run_checks(seed=seed, workers=workers, **opts)
    passed = all(c["passed"] for c in checks)
    return passed, {"checks": checks}, {"checks.csv": checks}


def run_fraclap(cfg, seed, workers):
    from . import fraclap, harness

    opts = _options(cfg, {"mode", "p", "lo", "hi", "points", "slope_tol", "lambdas", "weights", "alphas",
                          "cap", "offset"})
    mode = opts.get("mode", "power")
    if mode == "power":
        prm = build_params(cfg)
        grid = np.logspace(math.log10(opts.get("lo", 1e-4)), math.log10(opts.get("hi", 1e-1)), opts.get("points", 13))
        rep = fraclap.verify_power_bounds(prm.alpha, float(opts["p"]), grid, lam=prm.lam or 1.0, d=prm.d,
                                     slope_tol=opts.get("slope_tol", 0.05))
        rows = [dict(zip(("x", "value", "ratio_to_power", "verdict"), r)) for r in rep.rows()]
        payload = dict(regime=rep.regime, verdicts=rep.verdicts, constants=rep.empirical_constants,
                       params=dict(d=prm.d, alpha=prm.alpha, p=opts["p"], lam=prm.lam or 1.0))
        return rep.passed, payload, {"values.csv": rows}
    if mode == "curved":
        prm = build_params(cfg)
        dom = build_domain(cfg)
        grid = fraclap.default_hp_grid(dom, cap=opts.get("cap", 1e-3), n=opts.get("points", 7),
                                       offset=opts.get("offset", 0.3))
        rep = fraclap.verify_hp_bounds(dom, None, float(opts["p"]), prm, grid)
        rows = [dict(x=x, value=v, ratio_to_power=r, verdict=vd, achieved=e)
                for (x, v, r, vd), e in zip(rep.rows(), rep.achieved)]
        payload = dict(regime=rep.regime, verdicts=rep.verdicts, constants=rep.empirical_constants,
                       params=dict(d=prm.d, alpha=prm.alpha, p=opts["p"], lam=prm.lam or 1.0))
        return rep.passed, payload, {"values.csv": rows}
    if mode == "testfn":
        dom = build_domain(cfg)
        base = build_params(cfg)
        alphas = opts.get("alphas", [base.alpha])
        results = harness.verify_test_function_sweep([dom], alphas, opts.get("weights", [base.a]),
                                                     opts.get("lambdas", [1.0]))
        rows, reports = [], []
        for c, rep in results:
            if rep is None:
                reports.append(dict(config=c, passed=False, skipped="flat configuration failed"))
                continue
            reports.append(dict(config=c, **rep.as_dict()))
            for rh, off, g1, g2, e in zip(rep.rho, rep.offsets, rep.u1_values, rep.u2_values, rep.achieved):
                rows.append(dict(alpha=c["alpha"], a=c["a"], lam=c["lam"], rho=rh, offset=off, gen_u1=g1,
                                 gen_u2=g2, achieved=e, delta0=rep.delta0))
        passed = all(r["passed"] for r in reports)
        return passed, {"reports": reports}, {"values.csv": rows}
    raise ConfigError(f"unknown fraclap mode {mode!r}")


def _constant(rep):
    return rep.passed, rep.as_dict(), {"rows.csv": rep.rows}


def run_exit(cfg, seed, workers):
    from . import harness

    opts = _options(cfg, {"lambdas", "delta0", "starts", "compare_full"})
    prm, dom, pol = build_params(cfg), build_domain(cfg), build_policy(cfg)
    n = int(cfg.get("n", 100_000))
    delta0 = opts.get("delta0")
    if delta0 is None:
        delta0 = harness._default_delta0(dom, prm)
    rep = harness.run_exit_lambda_sweep(dom, prm, tuple(opts.get("lambdas", (1.0, 2.0, 4.0))), n, delta0=delta0,
                                        starts=opts.get("starts", 5), policy=pol, seed=seed, workers=workers)
    out = rep.as_dict()
    tables = {"rows.csv": rep.rows}
    passed = rep.passed
    if opts.get("compare_full", False):
        cmp_ = harness.compare_truncated_full(dom, prm, 1.0, n, delta0=delta0, starts=opts.get("starts", 5),
                                              policy=pol, seed=seed, workers=workers)
        out["truncated_vs_full"] = cmp_.as_dict()
        tables["truncated_vs_full.csv"] = cmp_.rows
        passed = passed and cmp_.passed
    return passed, out, tables


def run_levysystem(cfg, seed, workers):
    from .exit_mc import AnnulusTarget, levy_system_check
    from .regions import ball

    opts = _options(cfg, {"radius", "r_in", "r_out", "start", "seeds", "n_seeds"})
    prm, pol = build_params(cfg), build_policy(cfg)
    n = int(cfg.get("n", 100_000))
    d = prm.d
    region = ball(np.zeros(d), opts.get("radius", 0.5))
    target = AnnulusTarget(tuple([0.0] * d), opts.get("r_in", 1.0), opts.get("r_out", 2.0))
    table = target.table(prm)
    x0 = np.zeros(d)
    x0[0] = opts.get("start", 0.0)
    lhs, rhs, z = levy_system_check(region, prm, x0, target, n, pol, seed, 0, workers, table)
    rows = [dict(seed=seed, lhs=lhs.mean, lhs_se=lhs.stderr, rhs=rhs.mean, rhs_se=rhs.stderr, z=z)]
    zs = []
    for k in range(int(opts.get("n_seeds", 0))):
        l2, r2, z2 = levy_system_check(region, prm, x0, target, n, pol, seed, 1 + k, workers, table)
        zs.append(z2)
        rows.append(dict(seed=seed, stream=1 + k, lhs=l2.mean, lhs_se=l2.stderr, rhs=r2.mean, rhs_se=r2.stderr, z=z2))
    verdicts = {"z_below_3": bool(abs(z) < 3)}
    if zs:
        verdicts["z_distribution"] = bool(sum(abs(v) < 2 for v in zs) >= math.ceil(0.85 * len(zs)))
    payload = dict(verdicts=verdicts, lhs=lhs.as_dict(), rhs=rhs.as_dict(), z=z, z_streams=zs,
                   params=dict(d=d, alpha=prm.alpha, a=prm.a), n=n)
    return all(verdicts.values()), payload, {"rows.csv": rows}


def run_scaling(cfg, seed, workers):
    from . import harness

    opts = _options(cfg, {"combos", "t", "radius"})
    prm, pol = build_params(cfg), build_policy(cfg)
    n = int(cfg.get("n", 10_000))
    combos = opts.get("combos") or [dict(a=prm.a, lam=2.0, alpha=prm.alpha, truncated=False)]
    reports, rows = [], []
    for c in combos:
        p = prm.with_(a=c.get("a", prm.a), alpha=c.get("alpha", prm.alpha))
        rep = harness.run_scaling_check(p, float(c.get("lam", 2.0)), float(opts.get("t", 0.1)), n,
                                        radius=opts.get("radius", 1.0), truncated=bool(c.get("truncated", False)),
                                        policy=pol if cfg.get("policy") else None, seed=seed, workers=workers)
        reports.append(rep.as_dict())
        rows += [dict(a=p.a, alpha=p.alpha, lam=c.get("lam", 2.0), truncated=bool(c.get("truncated", False)), **r)
                 for r in rep.rows]
    passed = all(r["passed"] for r in reports)
    return passed, {"reports": reports}, {"rows.csv": rows}


def run_harnack(cfg, seed, workers):
    from . import harness

    opts = _options(cfg, {"r", "a_grid"})
    prm, pol = build_params(cfg), build_policy(cfg)
    rep = harness.run_harnack_experiment(prm, opts.get("r", 1.0), int(cfg.get("n", 100_000)), opts.get("a_grid"),
                                         policy=pol, seed=seed, workers=workers)
    return _constant(rep)


def run_carleson(cfg, seed, workers):
    from . import harness

    opts = _options(cfg, {"r", "a_grid"})
    rep = harness.run_carleson_experiment(build_domain(cfg), build_params(cfg), opts.get("r", 0.5),
                                          int(cfg.get("n", 100_000)), opts.get("a_grid"), policy=build_policy(cfg),
                                          seed=seed, workers=workers)
    return _constant(rep)


def run_bhp(cfg, seed, workers):
    from . import harness

    opts = _options(cfg, {"r", "a_grid"})
    rep = harness.run_bhp_experiment(build_domain(cfg), build_params(cfg), None, opts.get("r", 1.0),
                                     int(cfg.get("n", 100_000)), opts.get("a_grid"), policy=build_policy(cfg),
                                     seed=seed, workers=workers)
    return _constant(rep)


def run_lowerbound(cfg, seed, workers):
    from . import harness

    opts = _options(cfg, {"depths", "a_grid"})
    rep = harness.run_lower_bound_experiment(build_domain(cfg), build_params(cfg), int(cfg.get("n", 100_000)),
                                             opts.get("depths"), opts.get("a_grid"), policy=build_policy(cfg),
                                             seed=seed, workers=workers)
    return _constant(rep)


RUNNERS = {
    "selftest": run_selftest,
    "fraclap": run_fraclap,
    "exit": run_exit,
    "levysystem": run_levysystem,
    "scaling": run_scaling,
    "harnack": run_harnack,
    "carleson": run_carleson,
    "bhp": run_bhp,
    "lowerbound": run_lowerbound,
}


def run(kind: str, config: Optional[str] = None, seed: Optional[int] = None, workers: Optional[int] = None,
        out: Optional[str] = None) -> int:
    """Run one experiment and write its artifacts; returns the exit status."""
    try:
        cfg = load_config(kind, config)
    except (OSError, yaml.YAMLError, ConfigError) as exc:
        print(f"jumpbhp {kind}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    seed = int(cfg.get("seed", 0)) if seed is None else int(seed)
    if workers is None and cfg.get("workers") is not None:
        workers = int(cfg["workers"])
    out_dir = Path(out or os.path.join("jumpbhp-out", kind))
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"jumpbhp {kind}: cannot create {out_dir}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        passed, payload, tables = RUNNERS[kind](cfg, seed, workers)
    except ConfigError as exc:
        print(f"jumpbhp {kind}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AccuracyError as exc:
        write_json(out_dir / "report.json", dict(kind=kind, version=REPORT_VERSION, seed=seed, passed=False,
                                                  error=str(exc), best=exc.best, achieved=exc.achieved))
        print(f"jumpbhp {kind}: accuracy error: {exc}", file=sys.stderr)
        return EXIT_ACCURACY
    report = dict(kind=kind, version=REPORT_VERSION, package_version=__version__, seed=seed, passed=bool(passed),
                  config=cfg, result=payload)
    write_json(out_dir / "report.json", report)
    for name, rows in tables.items():
        write_csv(out_dir / name, rows)
    print(f"jumpbhp {kind}: {'PASS' if passed else 'FAIL'} -> {out_dir}")
    return EXIT_OK if passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="jumpbhp", description="Numerical checks for the mixed Brownian/stable process.")
    ap.add_argument("--version", action="version", version=f"jumpbhp {__version__}")
    sub = ap.add_subparsers(dest="kind", required=True)
    for kind in SUBCOMMANDS:
        sp = sub.add_parser(kind, help=f"run the {kind} experiment")
        sp.add_argument("--config", help="YAML config (default: the shipped config for this subcommand)")
        sp.add_argument("--seed", type=int, help="master seed (overrides the config)")
        sp.add_argument("--workers", type=int, help="worker threads (default: $JUMPBHP_WORKERS or CPU count)")
        sp.add_argument("--out", help="output directory (default: jumpbhp-out/<subcommand>)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run(args.kind, args.config, args.seed, args.workers, args.out)


if __name__ == "__main__":
    sys.exit(main())
