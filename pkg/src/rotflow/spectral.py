"""Periodic grid, transform, differential and projection primitives on the square torus.

The domain is fixed to [0, 2*pi)^2 so wavenumbers are integers.  Transform
normalization: forward unscaled, inverse scaled by 1/n^2 (numpy convention);
the analytic Fourier coefficient of a mode is ``fft2(data)[k] / n**2``.
All operations are pure: input fields are never modified.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

PHYSICAL = "physical"
SPECTRAL = "spectral"


@dataclass(frozen=True)
class Grid:
    """Pre-computed spectral machinery for an n x n periodic grid.

    n must be a power of two >= 16.  The Nyquist row/column (|k| = n/2) is
    zeroed by every differentiation so real fields stay real.
    """

    n: int
    length: float = field(default=2.0 * np.pi, init=False)

    def __post_init__(self):
        if self.n < 16 or (self.n & (self.n - 1)) != 0:
            raise ValueError(f"grid resolution must be a power of two >= 16, got {self.n}")
        n = self.n
        k1 = np.fft.fftfreq(n, d=1.0 / n)  # integers 0..n/2-1, -n/2..-1
        kx, ky = np.meshgrid(k1, k1, indexing="ij")
        object.__setattr__(self, "k1d", k1)
        object.__setattr__(self, "kx", kx)
        object.__setattr__(self, "ky", ky)
        object.__setattr__(self, "k2", kx**2 + ky**2)
        object.__setattr__(self, "k_mag", np.sqrt(kx**2 + ky**2))

        # derivative symbols with the Nyquist line removed
        dx = 1j * np.where(np.abs(kx) == n // 2, 0.0, kx)
        dy = 1j * np.where(np.abs(ky) == n // 2, 0.0, ky)
        object.__setattr__(self, "ikx", dx)
        object.__setattr__(self, "iky", dy)

        # 2/3-rule mask; cutoff floor((n-1)/3) keeps triple products exact
        kc = (n - 1) // 3
        object.__setattr__(self, "dealias_cutoff", kc)
        object.__setattr__(self, "dealias_mask",
                           (np.abs(kx) <= kc) & (np.abs(ky) <= kc))

        x = 2.0 * np.pi * np.arange(n) / n
        x1, x2 = np.meshgrid(x, x, indexing="ij")
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "x2", x2)

        # L^2 quadrature weight: cell area (2*pi/n)^2
        object.__setattr__(self, "cell_area", (2.0 * np.pi / n) ** 2)

    @property
    def spacing(self) -> float:
        return 2.0 * np.pi / self.n


@functools.lru_cache(maxsize=16)
def get_grid(n: int) -> Grid:
    """Shared Grid instances; construction is deterministic so caching is safe."""
    return Grid(n)


@dataclass(frozen=True)
class ScalarField:
    """Real periodic scalar field, stored either at grid points or as DFT coefficients."""

    grid: Grid
    data: np.ndarray
    representation: str = PHYSICAL

    def __post_init__(self):
        if self.data.shape != (self.grid.n, self.grid.n):
            raise ValueError(f"field shape {self.data.shape} does not match grid n={self.grid.n}")
        if self.representation not in (PHYSICAL, SPECTRAL):
            raise ValueError(f"unknown representation {self.representation!r}")


@dataclass(frozen=True)
class VectorField:
    """Two scalar components sharing one grid and one representation."""

    u1: ScalarField
    u2: ScalarField

    def __post_init__(self):
        if self.u1.grid is not self.u2.grid and self.u1.grid != self.u2.grid:
            raise ValueError("vector components must share a grid")
        if self.u1.representation != self.u2.representation:
            raise ValueError("vector components must share a representation")

    @property
    def grid(self) -> Grid:
        return self.u1.grid

    @property
    def representation(self) -> str:
        return self.u1.representation


def scalar(grid: Grid, data, representation: str = PHYSICAL) -> ScalarField:
    return ScalarField(grid, np.asarray(data), representation)


def vector(grid: Grid, d1, d2, representation: str = PHYSICAL) -> VectorField:
    return VectorField(scalar(grid, d1, representation), scalar(grid, d2, representation))


def to_spectral(f: ScalarField) -> ScalarField:
    if f.representation == SPECTRAL:
        return f
    return ScalarField(f.grid, np.fft.fft2(f.data), SPECTRAL)


def to_physical(f: ScalarField) -> ScalarField:
    if f.representation == PHYSICAL:
        return f
    return ScalarField(f.grid, np.fft.ifft2(f.data).real, PHYSICAL)


def vec_to_spectral(v: VectorField) -> VectorField:
    return VectorField(to_spectral(v.u1), to_spectral(v.u2))


def vec_to_physical(v: VectorField) -> VectorField:
    return VectorField(to_physical(v.u1), to_physical(v.u2))


def spectral_data(f: ScalarField) -> np.ndarray:
    """DFT coefficients of f (forward-unscaled convention)."""
    return f.data if f.representation == SPECTRAL else np.fft.fft2(f.data)


def physical_data(f: ScalarField) -> np.ndarray:
    return f.data if f.representation == PHYSICAL else np.fft.ifft2(f.data).real


def mode_amplitude(f: ScalarField, k1: int, k2: int) -> complex:
    """Analytic Fourier coefficient of the (k1, k2) mode (DFT value / n^2)."""
    n = f.grid.n
    return complex(spectral_data(f)[k1 % n, k2 % n]) / n**2


def mean(f: ScalarField) -> float:
    if f.representation == PHYSICAL:
        return float(np.mean(f.data))
    return float(f.data[0, 0].real) / f.grid.n**2


def _match(f: ScalarField, hat: np.ndarray) -> ScalarField:
    """Wrap spectral data `hat` in the representation of f."""
    out = ScalarField(f.grid, hat, SPECTRAL)
    return out if f.representation == SPECTRAL else to_physical(out)


def derivative(f: ScalarField, axis: int) -> ScalarField:
    """Spectral partial derivative along axis 0 (x1) or 1 (x2); Nyquist zeroed."""
    g = f.grid
    sym = g.ikx if axis == 0 else g.iky
    return _match(f, sym * spectral_data(f))


def gradient(f: ScalarField) -> VectorField:
    return VectorField(derivative(f, 0), derivative(f, 1))


def perp_gradient(f: ScalarField) -> VectorField:
    """Rotated gradient (-d2 f, d1 f)."""
    return VectorField(
        _match(f, -f.grid.iky * spectral_data(f)),
        _match(f, f.grid.ikx * spectral_data(f)),
    )


def divergence(v: VectorField) -> ScalarField:
    g = v.grid
    hat = g.ikx * spectral_data(v.u1) + g.iky * spectral_data(v.u2)
    return _match(v.u1, hat)


def curl(v: VectorField) -> ScalarField:
    """d1 v2 - d2 v1."""
    g = v.grid
    hat = g.ikx * spectral_data(v.u2) - g.iky * spectral_data(v.u1)
    return _match(v.u1, hat)


def laplacian(f: ScalarField) -> ScalarField:
    return _match(f, -f.grid.k2 * spectral_data(f))


def _require_zero_mean(f: ScalarField, what: str):
    hat = spectral_data(f)
    n2 = f.grid.n**2
    scale = max(1.0, float(np.abs(hat).max()) / n2)
    if abs(hat[0, 0]) / n2 > 1e-12 * scale:
        raise ValueError(f"{what} requires a zero-mean input "
                         f"(mean = {hat[0, 0] / n2:.3e})")


def inverse_laplacian(f: ScalarField) -> ScalarField:
    """Return g with laplacian(g) = f and zero mean; rejects nonzero-mean input."""
    _require_zero_mean(f, "inverse_laplacian")
    g = f.grid
    k2 = np.where(g.k2 == 0.0, 1.0, g.k2)
    hat = spectral_data(f) / (-k2)
    hat = hat.copy()
    hat[0, 0] = 0.0
    return _match(f, hat)


def biot_savart(omega: ScalarField) -> VectorField:
    """Divergence-free velocity with curl(u) = omega; omega must have zero mean."""
    _require_zero_mean(omega, "biot_savart")
    return perp_gradient(inverse_laplacian(omega))


def leray_project(v: VectorField) -> VectorField:
    """Orthogonal projection onto divergence-free fields (per-mode, exactly idempotent)."""
    g = v.grid
    a = spectral_data(v.u1)
    b = spectral_data(v.u2)
    k2 = np.where(g.k2 == 0.0, 1.0, g.k2)
    kdotv = (g.kx * a + g.ky * b) / k2
    kdotv[0, 0] = 0.0
    p1 = a - g.kx * kdotv
    p2 = b - g.ky * kdotv
    return VectorField(_match(v.u1, p1), _match(v.u2, p2))


def dealias(f: ScalarField) -> ScalarField:
    """Zero every coefficient with max(|k1|, |k2|) above the 2/3-rule cutoff."""
    return _match(f, spectral_data(f) * f.grid.dealias_mask)


def vec_dealias(v: VectorField) -> VectorField:
    return VectorField(dealias(v.u1), dealias(v.u2))


def l2_norm(f: ScalarField) -> float:
    """L^2 norm by grid quadrature (physical) or Parseval (spectral)."""
    if f.representation == PHYSICAL:
        return float(np.sqrt(np.sum(f.data**2) * f.grid.cell_area))
    n = f.grid.n
    return float(np.sqrt(np.sum(np.abs(f.data) ** 2)) * 2.0 * np.pi / n**2)


def l2_inner(f: ScalarField, g: ScalarField) -> float:
    return float(np.sum(physical_data(f) * physical_data(g)) * f.grid.cell_area)


def lp_norm(f: ScalarField, p: float) -> float:
    """Discrete L^p norm, grid-point quadrature with uniform weights."""
    d = physical_data(f)
    if np.isinf(p):
        return float(np.abs(d).max())
    return float((np.sum(np.abs(d) ** p) * f.grid.cell_area) ** (1.0 / p))


def vec_l2_norm(v: VectorField) -> float:
    return float(np.hypot(l2_norm(v.u1), l2_norm(v.u2)))


def grad_norm(v: VectorField) -> float:
    """L^2 norm of the full velocity gradient."""
    parts = [derivative(v.u1, 0), derivative(v.u1, 1),
             derivative(v.u2, 0), derivative(v.u2, 1)]
    return float(np.sqrt(sum(l2_norm(p) ** 2 for p in parts)))


def is_hermitian(f: ScalarField, tol: float = 1e-10) -> bool:
    """Check conjugate symmetry of the coefficients (real physical field)."""
    hat = spectral_data(f)
    n = f.grid.n
    idx = (-np.arange(n)) % n
    mirrored = np.conj(hat[np.ix_(idx, idx)])
    scale = max(1.0, float(np.abs(hat).max()))
    return bool(np.abs(hat - mirrored).max() <= tol * scale)
