"""Epsilon-sweep driver: runs the solver family, evaluates convergence metrics
against the limit dynamics, and fits log-log rates."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .limits import hom_limit_run, zonal_limit_residual, zonal_project
from .lp import sobolev_norm
from .solver import InitialData, RunResult, SimConfig, run
from .spectral import (
    ScalarField,
    derivative,
    physical_data,
    scalar,
    spectral_data,
)
from .windows import window_bank


def fit_rate(epsilons, values):
    """Least-squares slope of log(value) against log(epsilon).

    Returns (slope, residual, ok); ok is False (no fit) when fewer than three
    points or any value is non-positive.
    """
    eps = np.asarray(epsilons, dtype=float)
    val = np.asarray(values, dtype=float)
    if len(eps) < 3 or np.any(val <= 0.0):
        return math.nan, math.nan, False
    x = np.log(eps)
    y = np.log(val)
    coeffs, res, *_ = np.polyfit(x, y, 1, full=True)
    slope = float(coeffs[0])
    residual = float(np.sqrt(res[0] / len(x))) if len(res) else 0.0
    return slope, residual, True


def _check_times(ta, tb):
    if len(ta) != len(tb) or not np.allclose(ta, tb, atol=1e-12):
        raise ValueError("mismatched snapshot sampling between trajectories")


def metric_strong(times_a, us_a, times_b, us_b) -> float:
    """(int ||u_a - u_b||_L2^2 dt)^(1/2) by trapezoid over matching snapshots."""
    _check_times(times_a, times_b)
    vals = np.empty(len(times_a))
    for m in range(len(times_a)):
        d1 = physical_data(us_a[m].u1) - physical_data(us_b[m].u1)
        d2 = physical_data(us_a[m].u2) - physical_data(us_b[m].u2)
        vals[m] = np.sum(d1**2 + d2**2) * us_a[m].grid.cell_area
    return float(np.sqrt(np.trapezoid(vals, times_a)))


def metric_strong_scalar(times_a, fs_a, times_b, fs_b) -> float:
    _check_times(times_a, times_b)
    vals = np.empty(len(times_a))
    for m in range(len(times_a)):
        d = physical_data(fs_a[m]) - physical_data(fs_b[m])
        vals[m] = np.sum(d**2) * fs_a[m].grid.cell_area
    return float(np.sqrt(np.trapezoid(vals, times_a)))


def metric_weak(times_a, us_a, times_b, us_b, mode_cutoff: int = 8,
                n_windows: int = 10) -> float:
    """Weak-topology surrogate: max over low modes and smooth time windows of the
    windowed coefficient mismatch."""
    _check_times(times_a, times_b)
    grid = us_a[0].grid
    n = grid.n
    sel = (grid.k_mag <= mode_cutoff)
    worst = 0.0
    coeffs = np.empty((len(times_a), 2, int(sel.sum())), dtype=complex)
    for m in range(len(times_a)):
        for c in range(2):
            da = spectral_data(us_a[m].u1 if c == 0 else us_a[m].u2)
            db = spectral_data(us_b[m].u1 if c == 0 else us_b[m].u2)
            coeffs[m, c] = (da[sel] - db[sel]) / n**2
    for w in window_bank(float(times_a[-1]), n_windows):
        wt = w(times_a)
        paired = np.trapezoid(coeffs * wt[:, None, None], times_a, axis=0)
        worst = max(worst, float(np.abs(paired).max()))
    return worst


def metric_constraint(result: RunResult, rho0: ScalarField, n_windows: int = 10) -> float:
    """Time-windowed ||u . grad rho0||_{H^-1}, maximized over the window bank."""
    g1 = physical_data(derivative(rho0, 0))
    g2 = physical_data(derivative(rho0, 1))
    grid = result.grid
    times = result.times
    series = np.empty((len(times), grid.n, grid.n))
    for m in range(len(times)):
        series[m] = (physical_data(result.us[m].u1) * g1
                     + physical_data(result.us[m].u2) * g2)
    worst = 0.0
    for w in window_bank(float(times[-1]), n_windows):
        wt = w(times)
        wnorm = np.trapezoid(wt, times)
        avg = np.trapezoid(series * wt[:, None, None], times, axis=0) / wnorm
        worst = max(worst, sobolev_norm(scalar(grid, avg), -1.0))
    return worst


def metric_nonzonal(result: RunResult, rho0: ScalarField, n_windows: int = 10) -> float:
    """Non-zonal kinetic-energy fraction of the window-averaged velocity (max over windows)."""
    grid = result.grid
    times = result.times
    u1s = np.empty((len(times), grid.n, grid.n))
    u2s = np.empty((len(times), grid.n, grid.n))
    for m in range(len(times)):
        u1s[m] = physical_data(result.us[m].u1)
        u2s[m] = physical_data(result.us[m].u2)
    worst = 0.0
    from .spectral import vector

    for w in window_bank(float(times[-1]), n_windows):
        wt = w(times)
        wnorm = np.trapezoid(wt, times)
        a1 = np.trapezoid(u1s * wt[:, None, None], times, axis=0) / wnorm
        a2 = np.trapezoid(u2s * wt[:, None, None], times, axis=0) / wnorm
        ubar = vector(grid, a1, a2)
        uz = zonal_project(ubar, rho0)
        total = float(np.sum(a1**2 + a2**2))
        if total == 0.0:
            continue
        nz = float(np.sum((a1 - physical_data(uz.u1)) ** 2 + a2**2))
        worst = max(worst, nz / total)
    return worst


def _sigma_series(result: RunResult):
    cfg = result.config
    ref = physical_data(result.init.rho_ref)
    for m in range(len(result.times)):
        yield scalar(result.grid, (physical_data(result.rhos[m]) - ref) / cfg.epsilon)


def metric_sigma_bound(result: RunResult, order: float = -2.5) -> float:
    """sup over snapshots of ||sigma||_{H^order} (delta = 0.5 fixed)."""
    return max(sobolev_norm(sig, order) for sig in _sigma_series(result))


def metric_s_decay(result: RunResult, theta: float, order: float = -0.75) -> float:
    """sup_t ||s_eps||_{H^order} / eps^theta."""
    if not 0.0 < theta < 1.0:
        raise ValueError("decay exponent must lie in (0, 1)")
    cfg = result.config
    sup = max(sobolev_norm(sig, order) for sig in _sigma_series(result)) * cfg.epsilon
    return sup / cfg.epsilon**theta


def metric_s_supnorm(result: RunResult, order: float = -0.75) -> float:
    """sup_t ||s_eps||_{H^order}; the harness fits the decay exponent across the sweep."""
    cfg = result.config
    return max(sobolev_norm(sig, order) for sig in _sigma_series(result)) * cfg.epsilon


KNOWN_METRICS = ("strong_u", "strong_r", "weak_u", "constraint", "nonzonal",
                 "zonal_residual", "sigma_bound", "s_decay")
_NEEDS_LIMIT = {"strong_u", "strong_r", "weak_u"}


@dataclass(frozen=True)
class SweepConfig:
    epsilons: tuple
    base: SimConfig
    init: InitialData
    metrics: tuple = KNOWN_METRICS[:2]
    seed: int = 0
    limit_dt: float | None = None
    weak_mode_cutoff: int = 8
    n_windows: int = 10

    def __post_init__(self):
        eps = tuple(self.epsilons)
        if any(not 0.0 < e <= 1.0 for e in eps):
            raise ValueError("sweep epsilons must lie in (0, 1]")
        if any(eps[i + 1] >= eps[i] for i in range(len(eps) - 1)):
            raise ValueError("sweep epsilons must be strictly decreasing")
        unknown = set(self.metrics) - set(KNOWN_METRICS)
        if unknown:
            raise ValueError(f"unknown metrics {sorted(unknown)}; choices: {KNOWN_METRICS}")


@dataclass
class MetricSeries:
    name: str
    epsilons: tuple
    values: tuple
    slope: float
    residual: float
    fit_ok: bool
    expectation: str
    passed: bool


@dataclass
class ConvergenceReport:
    epsilons: tuple
    metrics: dict = field(default_factory=dict)
    failures: tuple = ()

    @property
    def passed(self) -> bool:
        return not self.failures and all(m.passed for m in self.metrics.values())


def _strictly_decreasing(values) -> bool:
    return all(values[i + 1] < values[i] for i in range(len(values) - 1))


def _evaluate(name, epsilons, values):
    slope, residual, ok = fit_rate(epsilons, values)
    if name == "strong_u":
        expectation = "strictly decreasing, slope >= 0.8"
        passed = _strictly_decreasing(values) and ok and slope >= 0.8
    elif name in ("strong_r", "weak_u", "constraint", "nonzonal", "zonal_residual"):
        expectation = "strictly decreasing"
        passed = _strictly_decreasing(values)
    elif name == "sigma_bound":
        expectation = "max/min <= 10"
        passed = max(values) / min(values) <= 10.0 if min(values) > 0 else False
    elif name == "s_decay":
        expectation = "fitted decay exponent > 0"
        passed = ok and slope > 0.0
    else:
        expectation = "none"
        passed = True
    return MetricSeries(name, tuple(epsilons), tuple(values), slope, residual,
                        ok, expectation, passed)


def default_worker_count() -> int:
    env = os.environ.get("ROTFLOW_THREADS")
    if env:
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


def run_sweep(cfg: SweepConfig, keep_runs: bool = False):
    """One solver run per epsilon (concurrent), one limit run if any metric needs
    it, then the metric table with fitted rates.

    Returns (report, runs_dict) where runs_dict maps epsilon -> RunResult (and
    'limit' -> HomRunResult) when keep_runs is set, else an empty dict.
    """
    # common step size across the whole sweep (and the limit run): scheme errors
    # then cancel in trajectory differences instead of masking the epsilon rate
    dt_cap = cfg.base.dt_policy.coriolis_fraction * min(cfg.epsilons)
    if cfg.base.dt_max is not None:
        dt_cap = min(dt_cap, cfg.base.dt_max)
    base = replace(cfg.base, dt_max=dt_cap)
    results = {}
    failures = []

    def one(eps):
        return run(replace(base, epsilon=eps), cfg.init)

    with ThreadPoolExecutor(max_workers=default_worker_count()) as pool:
        futures = {eps: pool.submit(one, eps) for eps in cfg.epsilons}
        for eps in cfg.epsilons:
            try:
                results[eps] = futures[eps].result()
            except Exception as exc:  # noqa: BLE001 - partial report flags the failure
                failures.append(f"epsilon={eps}: {exc}")

    report = ConvergenceReport(epsilons=tuple(cfg.epsilons), failures=tuple(failures))
    if failures:
        return report, (results if keep_runs else {})

    limit = None
    if _NEEDS_LIMIT & set(cfg.metrics):
        # the ε-runs share one dt by construction; reuse it for the limit run
        ref = results[cfg.epsilons[0]]
        dt_limit = cfg.limit_dt or float(ref.ledger.dts[0])
        snap = base.snapshot_interval or base.t_end / 40.0
        limit = hom_limit_run(cfg.init.r0, cfg.init.u0, base.nu, base.t_end,
                              dt_limit, snap)

    eps_list = list(cfg.epsilons)
    for name in cfg.metrics:
        values = []
        for eps in eps_list:
            res = results[eps]
            if name == "strong_u":
                v = metric_strong(res.times, res.us, limit.times, limit.us)
            elif name == "strong_r":
                sigmas = list(_sigma_series(res))
                v = metric_strong_scalar(res.times, sigmas, limit.times, limit.rs)
            elif name == "weak_u":
                v = metric_weak(res.times, res.us, limit.times, limit.us,
                                cfg.weak_mode_cutoff, cfg.n_windows)
            elif name == "constraint":
                v = metric_constraint(res, cfg.init.rho_ref, cfg.n_windows)
            elif name == "nonzonal":
                v = metric_nonzonal(res, cfg.init.rho_ref, cfg.n_windows)
            elif name == "zonal_residual":
                v = float(np.sqrt(np.mean(
                    zonal_limit_residual(res, cfg.init.rho_ref, cfg.n_windows) ** 2)))
            elif name == "sigma_bound":
                v = metric_sigma_bound(res)
            elif name == "s_decay":
                v = metric_s_supnorm(res)
            values.append(v)
        report.metrics[name] = _evaluate(name, eps_list, values)

    if keep_runs:
        results["limit"] = limit
        return report, results
    return report, {}
