"""Strict TOML configuration parsing for runs and sweeps.

Unknown keys are rejected with their full path; every field has a default, so
an empty file is a valid configuration.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from .fields import (
    named_scalar,
    named_velocity,
    random_divfree_velocity,
    random_smooth_field,
    SCALAR_REGISTRY,
    VELOCITY_REGISTRY,
)
from .harness import KNOWN_METRICS, SweepConfig
from .solver import DtPolicy, InitialData, SimConfig, prepare_initial_data
from .spectral import get_grid


class ConfigError(ValueError):
    pass


_SIM_KEYS = {
    "dt_max": float,
    "epsilon": float, "nu": float, "n": int, "t_end": float,
    "density_floor": float, "dealias": bool, "elliptic_tol": float,
    "elliptic_max_iter": int, "hyperdiffusion": float,
    "snapshot_interval": float, "seed": int,
}
_DT_KEYS = {"cfl_number": float, "coriolis_fraction": float}
_INITIAL_KEYS = {
    "rho_ref": str, "rho_ref_value": float,
    "r0": str, "r0_amplitude": float,
    "u0": str, "u0_amplitude": float,
}
_SWEEP_KEYS = {
    "epsilons": list, "metrics": list, "seed": int, "limit_dt": float,
    "weak_mode_cutoff": int, "n_windows": int,
}


def _check_table(table: dict, allowed: dict, path: str):
    for key, value in table.items():
        if key not in allowed:
            raise ConfigError(f"unknown key {path}.{key}")
        want = allowed[key]
        if want is float and isinstance(value, int) and not isinstance(value, bool):
            continue
        if not isinstance(value, want) or (want is not bool and isinstance(value, bool)):
            raise ConfigError(f"{path}.{key}: expected {want.__name__}, got {value!r}")


def _parse_sim(table: dict, path: str) -> SimConfig:
    table = dict(table)
    dt_table = table.pop("dt_policy", {})
    if not isinstance(dt_table, dict):
        raise ConfigError(f"{path}.dt_policy must be a table")
    _check_table(table, _SIM_KEYS, path)
    _check_table(dt_table, _DT_KEYS, f"{path}.dt_policy")
    try:
        return SimConfig(dt_policy=DtPolicy(**dt_table), **table)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _parse_initial(table: dict, sim: SimConfig, path: str) -> InitialData:
    _check_table(table, _INITIAL_KEYS, path)
    grid = get_grid(sim.n)
    rng = np.random.default_rng(sim.seed)
    rho_name = table.get("rho_ref", "constant")
    rho_value = table.get("rho_ref_value", 1.0)
    r0_name = table.get("r0", "cos_x1_plus_sin_x2")
    r0_amp = table.get("r0_amplitude", 1.0)
    u0_name = table.get("u0", "default_mix")
    u0_amp = table.get("u0_amplitude", 1.0)

    try:
        rho_ref = named_scalar(grid, rho_name, rho_value)
        if r0_name == "random":
            r0 = random_smooth_field(grid, rng, amplitude=r0_amp)
        else:
            r0 = named_scalar(grid, r0_name, r0_amp)
        if u0_name == "random":
            u0 = random_divfree_velocity(grid, rng, amplitude=u0_amp)
        else:
            u0 = named_velocity(grid, u0_name, u0_amp)
    except KeyError as exc:
        raise ConfigError(f"{path}: {exc.args[0]}") from exc
    return prepare_initial_data(rho_ref, r0, u0)


@dataclass(frozen=True)
class RunSpec:
    sim: SimConfig
    init: InitialData


@dataclass(frozen=True)
class SweepSpec:
    sweep: SweepConfig


def parse_config(path):
    """Parse a run or sweep TOML file into a validated spec."""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    with open(p, "rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc

    top_allowed = {"sim", "initial", "sweep"}
    unknown = set(doc) - top_allowed
    if unknown:
        raise ConfigError(f"unknown top-level table(s): {sorted(unknown)}")

    if "sweep" in doc:
        if "sim" in doc or "initial" in doc:
            raise ConfigError("a sweep config uses [sweep.base] and [sweep.initial], "
                              "not top-level [sim]/[initial]")
        sw = dict(doc["sweep"])
        base_table = sw.pop("base", {})
        init_table = sw.pop("initial", {})
        _check_table(sw, _SWEEP_KEYS, "sweep")
        base = _parse_sim(base_table, "sweep.base")
        init = _parse_initial(init_table, base, "sweep.initial")
        epsilons = tuple(float(e) for e in sw.get("epsilons", (0.2, 0.1, 0.05, 0.025)))
        metrics = tuple(sw.get("metrics", list(KNOWN_METRICS[:2])))
        try:
            sweep = SweepConfig(
                epsilons=epsilons,
                base=base,
                init=init,
                metrics=metrics,
                seed=sw.get("seed", base.seed),
                limit_dt=sw.get("limit_dt"),
                weak_mode_cutoff=sw.get("weak_mode_cutoff", 8),
                n_windows=sw.get("n_windows", 10),
            )
        except ValueError as exc:
            raise ConfigError(f"sweep: {exc}") from exc
        return SweepSpec(sweep)

    sim = _parse_sim(doc.get("sim", {}), "sim")
    init = _parse_initial(doc.get("initial", {}), sim, "initial")
    return RunSpec(sim, init)
