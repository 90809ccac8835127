"""Command-line driver: run | sweep | lp-test | limit-compare | report.

Exit codes: 1 configuration error, 2 runtime failure, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import io as rio
from .config import ConfigError, RunSpec, SweepSpec, parse_config
from .elliptic import EllipticError
from .harness import run_sweep, metric_strong, metric_strong_scalar, _sigma_series
from .limits import hom_limit_run, zonal_limit_residual
from .lp_suite import full_suite
from .solver import SolverError, run
from .spectral import physical_data


def _outdir(args, default):
    base = args.outdir or os.environ.get("ROTFLOW_OUTDIR") or default
    return Path(base)


def cmd_run(args) -> int:
    spec = parse_config(args.config)
    if not isinstance(spec, RunSpec):
        raise ConfigError(f"{args.config} is a sweep config; use `rotflow sweep`")
    result = run(spec.sim, spec.init)
    outdir = _outdir(args, "run_out")
    rio.write_run(result, outdir)
    print(f"run finished: {len(result.times) - 1} snapshots, "
          f"energy excess {result.ledger.energy_excess():.3g} (<=1 passes), "
          f"outputs in {outdir}")
    return 0


def cmd_sweep(args) -> int:
    spec = parse_config(args.config)
    if not isinstance(spec, SweepSpec):
        raise ConfigError(f"{args.config} is a run config; use `rotflow run`")
    outdir = _outdir(args, "sweep_out")
    outdir.mkdir(parents=True, exist_ok=True)
    report, runs = run_sweep(spec.sweep, keep_runs=True)
    for eps in spec.sweep.epsilons:
        if eps in runs:
            rio.write_run(runs[eps], outdir / f"run_eps_{eps:g}")
    if report.failures:
        (outdir / "FAILED").write_text("\n".join(report.failures) + "\n")
        print("sweep aborted; partial report flagged:", *report.failures, sep="\n  ")
        return 2

    metric_rows = []
    for name, series in report.metrics.items():
        for eps, val in zip(series.epsilons, series.values):
            metric_rows.append((name, float(eps), float(val)))
    rio.emit_csv(outdir / "metrics.csv", ("metric", "epsilon", "value"), metric_rows)
    rate_rows = [
        (name, s.slope if s.fit_ok else float("nan"),
         s.residual if s.fit_ok else float("nan"),
         s.expectation, "pass" if s.passed else "fail")
        for name, s in report.metrics.items()
    ]
    rio.emit_csv(outdir / "rates.csv",
                 ("metric", "slope", "residual", "expectation", "status"), rate_rows)
    print(f"sweep finished: {'PASS' if report.passed else 'FAIL'}; outputs in {outdir}")
    return 0 if report.passed else 2


def cmd_lp_test(args) -> int:
    sizes = tuple(int(s) for s in args.sizes.split(","))
    rows = full_suite(sizes)
    out = Path(args.out)
    rio.emit_csv(out, ("property", "n", "parameter", "measured", "bound", "status"), rows)
    failed = [r for r in rows if r[-1] != "pass"]
    print(f"lp-test: {len(rows) - len(failed)}/{len(rows)} properties passed; CSV at {out}")
    return 0 if not failed else 2


def cmd_limit_compare(args) -> int:
    spec = parse_config(args.limit_config)
    if not isinstance(spec, RunSpec):
        raise ConfigError("limit-compare expects a run-style config for the limit system")
    outdir = _outdir(args, "limit_compare_out")
    outdir.mkdir(parents=True, exist_ok=True)

    runs = [rio.load_run(d) for d in args.runs]
    runs.sort(key=lambda r: -r.config.epsilon)
    sim = spec.sim
    snap = runs[0].times[1] - runs[0].times[0] if len(runs[0].times) > 1 else None
    limit = hom_limit_run(spec.init.r0, spec.init.u0, sim.nu,
                          float(runs[0].times[-1]),
                          sim.dt_policy.coriolis_fraction * min(r.config.epsilon for r in runs),
                          snap)

    rows = []
    for res in runs:
        eps = res.config.epsilon
        rows.append(("strong_u", eps, metric_strong(res.times, res.us,
                                                    limit.times, limit.us)))
        sigmas = list(_sigma_series(res))
        rows.append(("strong_r", eps, metric_strong_scalar(res.times, sigmas,
                                                           limit.times, limit.rs)))
        zr = zonal_limit_residual(res, res.init.rho_ref) \
            if _is_zonal(res.init.rho_ref) else None
        if zr is not None:
            rows.append(("zonal_residual_rms", eps, float(np.sqrt(np.mean(zr**2)))))
    rio.emit_csv(outdir / "residuals.csv", ("metric", "epsilon", "value"), rows)
    print(f"limit-compare finished; residual CSV in {outdir}")
    return 0


def _is_zonal(rho_ref) -> bool:
    from .limits import _require_zonal

    try:
        _require_zonal(rho_ref)
        return True
    except ValueError:
        return False


def cmd_report(args) -> int:
    header, rows = rio.read_csv(args.metrics)
    if not rows:
        print("report: metrics file is empty", file=sys.stderr)
        return 2
    outdir = _outdir(args, "report_out")
    outdir.mkdir(parents=True, exist_ok=True)
    by_metric = {}
    for row in rows:
        by_metric.setdefault(row[0], []).append((float(row[1]), float(row[2])))
    for name, pts in by_metric.items():
        with open(outdir / f"{name}.dat", "w") as fh:
            for eps, val in sorted(pts, reverse=True):
                fh.write(f"{rio.format_float(eps)} {rio.format_float(val)}\n")
    print(f"report: wrote {len(by_metric)} plot-ready files to {outdir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rotflow")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="integrate one configuration")
    p.add_argument("--config", required=True)
    p.add_argument("--outdir")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="epsilon sweep with convergence metrics")
    p.add_argument("--config", required=True)
    p.add_argument("--outdir")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("lp-test", help="dyadic-analysis property suite CSV")
    p.add_argument("--sizes", default="64,128")
    p.add_argument("--out", default="lp_test.csv")
    p.set_defaults(func=cmd_lp_test)

    p = sub.add_parser("limit-compare", help="residuals of stored runs against a limit run")
    p.add_argument("--runs", nargs="+", required=True)
    p.add_argument("--limit-config", required=True)
    p.add_argument("--outdir")
    p.set_defaults(func=cmd_limit_compare)

    p = sub.add_parser("report", help="render metrics.csv into two-column data files")
    p.add_argument("--metrics", required=True)
    p.add_argument("--outdir")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except (SolverError, EllipticError, ValueError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
