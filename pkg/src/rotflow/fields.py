"""Seeded random field corpora and the named analytic fields used by configs and tests."""

from __future__ import annotations

import numpy as np

from .spectral import (
    Grid,
    ScalarField,
    VectorField,
    dealias,
    leray_project,
    scalar,
    vec_dealias,
    vector,
)

RNG_ALGORITHM = "numpy.random.default_rng (PCG64)"


def _shaped_noise(grid: Grid, rng: np.random.Generator, envelope: np.ndarray,
                  zero_mean: bool = True) -> np.ndarray:
    """Real field with spectrum |white noise| * envelope(|k|); Hermitian by construction."""
    white = rng.standard_normal((grid.n, grid.n))
    hat = np.fft.fft2(white) * envelope
    if zero_mean:
        hat[0, 0] = 0.0
    return np.fft.ifft2(hat).real


def random_smooth_field(grid: Grid, rng: np.random.Generator, k_peak: float = 4.0,
                        amplitude: float = 1.0, zero_mean: bool = True) -> ScalarField:
    """Gaussian-spectrum random field, normalized to the requested max amplitude."""
    env = np.exp(-((grid.k_mag / k_peak) ** 2))
    data = _shaped_noise(grid, rng, env, zero_mean)
    peak = np.abs(data).max()
    if peak > 0:
        data *= amplitude / peak
    return dealias(scalar(grid, data))


def random_power_law_field(grid: Grid, rng: np.random.Generator, slope: float = -1.0,
                           amplitude: float = 1.0) -> ScalarField:
    """Random field with |coefficients| ~ |k|^slope; band energy roughly flat per octave."""
    km = np.where(grid.k_mag == 0.0, 1.0, grid.k_mag)
    env = km**slope
    env[0, 0] = 0.0
    data = _shaped_noise(grid, rng, env, zero_mean=True)
    rms = np.sqrt(np.mean(data**2))
    if rms > 0:
        data *= amplitude / rms
    return scalar(grid, data)


def random_annulus_field(grid: Grid, rng: np.random.Generator, j: int) -> ScalarField:
    """Random field spectrally supported in the closed annulus 2^(j-1) <= |k| <= 2^(j+1)."""
    lo, hi = 2.0 ** (j - 1), 2.0 ** (j + 1)
    mask = (grid.k_mag >= lo) & (grid.k_mag <= hi)
    data = _shaped_noise(grid, rng, mask.astype(float))
    rms = np.sqrt(np.mean(data**2))
    if rms > 0:
        data /= rms
    return scalar(grid, data)


def random_divfree_velocity(grid: Grid, rng: np.random.Generator, k_peak: float = 3.0,
                            amplitude: float = 0.5) -> VectorField:
    """Random smooth divergence-free velocity with the requested max speed."""
    a = random_smooth_field(grid, rng, k_peak).data
    b = random_smooth_field(grid, rng, k_peak).data
    v = leray_project(vec_dealias(vector(grid, a, b)))
    speed = np.sqrt(v.u1.data**2 + v.u2.data**2).max()
    if speed > 0:
        v = vector(grid, v.u1.data * amplitude / speed, v.u2.data * amplitude / speed)
    return v


# --- named analytic fields (config registry) ---

def constant_field(grid: Grid, value: float = 1.0) -> ScalarField:
    return scalar(grid, np.full((grid.n, grid.n), float(value)))


def zonal_reference(grid: Grid) -> ScalarField:
    """Default non-constant reference density 2 + sin(x2)."""
    return scalar(grid, 2.0 + np.sin(grid.x2))


def default_r0(grid: Grid, amplitude: float = 1.0) -> ScalarField:
    """Default density perturbation cos(x1) + sin(x2)."""
    return scalar(grid, amplitude * (np.cos(grid.x1) + np.sin(grid.x2)))


def shear_velocity(grid: Grid, amplitude: float = 1.0) -> VectorField:
    """Zonal shear (amplitude * sin(x2), 0)."""
    return vector(grid, amplitude * np.sin(grid.x2), np.zeros((grid.n, grid.n)))


def default_u0(grid: Grid, amplitude: float = 1.0) -> VectorField:
    """Leray projection of (sin(x2) cos(x1), 0) plus a half-amplitude shear."""
    raw = vector(grid, np.sin(grid.x2) * np.cos(grid.x1), np.zeros((grid.n, grid.n)))
    v = leray_project(raw)
    sh = shear_velocity(grid, 0.5)
    out = vector(grid, amplitude * (v.u1.data + sh.u1.data), amplitude * v.u2.data)
    return vec_dealias(out)


SCALAR_REGISTRY = {
    "zero": lambda grid, amp: scalar(grid, np.zeros((grid.n, grid.n))),
    "constant": lambda grid, amp: constant_field(grid, amp),
    "zonal": lambda grid, amp: zonal_reference(grid),
    "cos_x1_plus_sin_x2": default_r0,
    "cos_x1": lambda grid, amp: scalar(grid, amp * np.cos(grid.x1)),
    "sin_x2": lambda grid, amp: scalar(grid, amp * np.sin(grid.x2)),
}

VELOCITY_REGISTRY = {
    "zero": lambda grid, amp: vector(grid, np.zeros((grid.n, grid.n)), np.zeros((grid.n, grid.n))),
    "shear_sin_x2": shear_velocity,
    "default_mix": default_u0,
}


def named_scalar(grid: Grid, name: str, amplitude: float = 1.0) -> ScalarField:
    if name not in SCALAR_REGISTRY:
        raise KeyError(f"unknown scalar field {name!r}; choices: {sorted(SCALAR_REGISTRY)}")
    return SCALAR_REGISTRY[name](grid, amplitude)


def named_velocity(grid: Grid, name: str, amplitude: float = 1.0) -> VectorField:
    if name not in VELOCITY_REGISTRY:
        raise KeyError(f"unknown velocity field {name!r}; choices: {sorted(VELOCITY_REGISTRY)}")
    return VELOCITY_REGISTRY[name](grid, amplitude)
