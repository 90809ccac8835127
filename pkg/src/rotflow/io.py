"""Binary field snapshots, CSV emission, run directories and manifests."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import struct
import time
from pathlib import Path

import numpy as np

from . import __version__
from .fields import RNG_ALGORITHM
from .solver import (
    DtPolicy,
    EnergyLedger,
    InitialData,
    RunResult,
    SimConfig,
)
from .spectral import (
    PHYSICAL,
    SPECTRAL,
    ScalarField,
    VectorField,
    get_grid,
    scalar,
    vector,
)

MAGIC = b"RFLOWF01"
_HEADER = struct.Struct("<8sIBddd")  # magic, n, representation, t, epsilon, nu


def snapshot_write(path, f: ScalarField, t: float = 0.0, epsilon: float = 1.0,
                   nu: float = 0.0):
    """Field snapshot: header then row-major little-endian float64 payload
    (interleaved re/im pairs for spectral data)."""
    rep = 0 if f.representation == PHYSICAL else 1
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, f.grid.n, rep, t, epsilon, nu))
        if rep == 0:
            fh.write(np.ascontiguousarray(f.data, dtype="<f8").tobytes())
        else:
            inter = np.empty((f.grid.n, f.grid.n, 2), dtype="<f8")
            inter[..., 0] = f.data.real
            inter[..., 1] = f.data.imag
            fh.write(inter.tobytes())


def snapshot_read(path):
    """Returns (field, t, epsilon, nu); bit-exact round trip with snapshot_write."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        magic, n, rep, t, epsilon, nu = _HEADER.unpack(head)
        if magic != MAGIC:
            raise ValueError(f"{path}: not a field snapshot (bad magic {magic!r})")
        grid = get_grid(n)
        if rep == 0:
            data = np.frombuffer(fh.read(n * n * 8), dtype="<f8").reshape(n, n)
            field = scalar(grid, data.astype(np.float64))
        else:
            raw = np.frombuffer(fh.read(n * n * 16), dtype="<f8").reshape(n, n, 2)
            field = ScalarField(grid, raw[..., 0] + 1j * raw[..., 1], SPECTRAL)
    return field, t, epsilon, nu


def format_float(x) -> str:
    return f"{x:.17g}"


def emit_csv(path, header, rows):
    """CSV with a header row; floats at 17 significant digits."""
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            cells = [format_float(c) if isinstance(c, float) else str(c) for c in row]
            fh.write(",".join(cells) + "\n")


def read_csv(path):
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines:
        return [], []
    header = lines[0].split(",")
    return header, [ln.split(",") for ln in lines[1:]]


def sha256_of(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def config_to_dict(cfg: SimConfig) -> dict:
    return dataclasses.asdict(cfg)


def config_from_dict(d: dict) -> SimConfig:
    d = dict(d)
    d["dt_policy"] = DtPolicy(**d.get("dt_policy", {}))
    return SimConfig(**d)


def write_manifest(outdir: Path, cfg_echo: dict, seed: int, started: float,
                   finished: float, outputs):
    manifest = {
        "code_version": __version__,
        "rng_algorithm": RNG_ALGORITHM,
        "seed": seed,
        "started_at": started,
        "finished_at": finished,
        "config": cfg_echo,
        "outputs": {name: sha256_of(outdir / name) for name in sorted(outputs)},
    }
    with open(outdir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return manifest


def write_run(result: RunResult, outdir) -> dict:
    """Persist a trajectory: ledger CSV, initial-data and per-snapshot fields, manifest."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    started = time.time()
    cfg = result.config
    outputs = []

    emit_csv(outdir / "ledger.csv", EnergyLedger.COLUMNS, result.ledger.rows())
    outputs.append("ledger.csv")

    snapdir = outdir / "snapshots"
    snapdir.mkdir(exist_ok=True)
    for name, fld in (("rho_ref", result.init.rho_ref), ("r0", result.init.r0),
                      ("u0_1", result.init.u0.u1), ("u0_2", result.init.u0.u2)):
        rel = f"snapshots/init_{name}.bin"
        snapshot_write(outdir / rel, fld, 0.0, cfg.epsilon, cfg.nu)
        outputs.append(rel)
    for m, t in enumerate(result.times):
        for name, fld in (("rho", result.rhos[m]), ("u1", result.us[m].u1),
                          ("u2", result.us[m].u2)):
            rel = f"snapshots/{m:05d}_{name}.bin"
            snapshot_write(outdir / rel, fld, float(t), cfg.epsilon, cfg.nu)
            outputs.append(rel)

    return write_manifest(outdir, config_to_dict(cfg), cfg.seed, started,
                          time.time(), outputs)


def load_run(outdir) -> RunResult:
    """Rebuild a RunResult (trajectory + config; the ledger is not reloaded)."""
    outdir = Path(outdir)
    with open(outdir / "manifest.json") as fh:
        manifest = json.load(fh)
    cfg = config_from_dict(manifest["config"])
    snapdir = outdir / "snapshots"
    rho_ref, *_ = snapshot_read(snapdir / "init_rho_ref.bin")
    r0, *_ = snapshot_read(snapdir / "init_r0.bin")
    u0_1, *_ = snapshot_read(snapdir / "init_u0_1.bin")
    u0_2, *_ = snapshot_read(snapdir / "init_u0_2.bin")
    init = InitialData(rho_ref, r0, VectorField(u0_1, u0_2))

    times, rhos, us = [], [], []
    m = 0
    while (snapdir / f"{m:05d}_rho.bin").exists():
        rho, t, _, _ = snapshot_read(snapdir / f"{m:05d}_rho.bin")
        u1, *_ = snapshot_read(snapdir / f"{m:05d}_u1.bin")
        u2, *_ = snapshot_read(snapdir / f"{m:05d}_u2.bin")
        times.append(t)
        rhos.append(rho)
        us.append(VectorField(u1, u2))
        m += 1
    ledger = EnergyLedger()
    return RunResult(cfg, init, np.asarray(times), rhos, us, ledger)
