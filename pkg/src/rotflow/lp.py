"""Dyadic frequency decomposition, Besov/Sobolev norms, paraproducts and inequality checks.

The radial cutoff chi equals 1 on |xi| <= 1 and 0 on |xi| >= 2 with a smooth
exp-mollifier transition.  Blocks are telescoping differences of chi dilations,
so the discrete partition of unity is exact by construction: the top block
absorbs everything left up to Nyquist, making the multipliers sum to exactly 1
at every lattice point.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .spectral import (
    Grid,
    ScalarField,
    derivative,
    l2_norm,
    lp_norm,
    physical_data,
    scalar,
    spectral_data,
    _match,
    _require_zero_mean,
)


def chi_profile(r: np.ndarray) -> np.ndarray:
    """Smooth radial bump: 1 on r <= 1, 0 on r >= 2, C-infinity in between."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    out[r <= 1.0] = 1.0
    band = (r > 1.0) & (r < 2.0)
    if np.any(band):
        s = r[band]
        up = np.exp(-1.0 / (2.0 - s))
        down = np.exp(-1.0 / (s - 1.0))
        out[band] = up / (up + down)
    return out


@dataclass(frozen=True)
class DyadicDecomposition:
    """Discrete dyadic blocks on a grid: chi block (j = -1) plus phi_j for j = 0..j_max.

    block_mults[j + 1] is the spectral multiplier of block j; smult[M] is the
    low-pass multiplier (the cumulative sum of blocks below M).
    """

    grid: Grid
    chi: np.ndarray
    phi_j: tuple
    j_max: int
    block_mults: np.ndarray
    smult: np.ndarray

    def block_range(self):
        return range(-1, self.j_max + 1)


@functools.lru_cache(maxsize=16)
def _decomposition(n: int) -> DyadicDecomposition:
    from .spectral import get_grid

    grid = get_grid(n)
    j_max = int(math.log2(n)) - 2  # 2^(j_max + 1) = n / 2
    km = grid.k_mag

    # c_j = chi(2^-j |k|); block -1 is c_0, block j < j_max is c_{j+1} - c_j,
    # and the top block absorbs everything left so the sum is exactly 1.
    cuts = [chi_profile(km / 2.0**j) for j in range(j_max + 1)]
    blocks = np.empty((j_max + 2, n, n))
    blocks[0] = cuts[0]
    for j in range(j_max):
        blocks[j + 1] = cuts[j + 1] - cuts[j]

    # smult[M] is the multiplier of S_M (blocks up to M - 1), accumulated in
    # ascending block order; smult[j_max + 1] is exactly 1 everywhere.
    smult = np.empty((j_max + 2, n, n))
    running = blocks[0].copy()
    smult[0] = running
    for M in range(1, j_max + 1):
        running = running + blocks[M]
        smult[M] = running
    blocks[j_max + 1] = 1.0 - running
    smult[j_max + 1] = running + blocks[j_max + 1]

    return DyadicDecomposition(
        grid=grid,
        chi=blocks[0],
        phi_j=tuple(blocks[j + 1] for j in range(j_max + 1)),
        j_max=j_max,
        block_mults=blocks,
        smult=smult,
    )


def decomposition(grid: Grid) -> DyadicDecomposition:
    return _decomposition(grid.n)


def dyadic_block(u: ScalarField, j: int) -> ScalarField:
    """Block restriction Delta_j u; j ranges over -1..j_max."""
    dd = decomposition(u.grid)
    if not -1 <= j <= dd.j_max:
        raise ValueError(f"block index {j} outside [-1, {dd.j_max}]")
    return _match(u, dd.block_mults[j + 1] * spectral_data(u))


def low_pass(u: ScalarField, M: int) -> ScalarField:
    """Low-frequency cut-off S_M u, the sum of all blocks below M."""
    if M < 0:
        raise ValueError(f"low-pass index must be >= 0, got {M}")
    dd = decomposition(u.grid)
    return _match(u, dd.smult[min(M, dd.j_max + 1)] * spectral_data(u))


@dataclass(frozen=True)
class BesovIndex:
    s: float
    p: float
    r: float

    def __post_init__(self):
        if not (1.0 <= self.p) or not (1.0 <= self.r):
            raise ValueError("Besov integrability exponents must lie in [1, inf]")


def sobolev_norm(u: ScalarField, s: float) -> float:
    """Direct spectral H^s norm: sum of (1+|k|^2)^s |u_hat|^2 under the grid's Parseval scaling."""
    hat = spectral_data(u)
    w = (1.0 + u.grid.k2) ** s
    total = float(np.sum(w * np.abs(hat) ** 2))
    return math.sqrt(total) * 2.0 * np.pi / u.grid.n**2


def sobolev_norm_lp(u: ScalarField, s: float) -> float:
    """Littlewood-Paley form of the H^s norm: sum over blocks of 4^(js) ||Delta_j u||^2."""
    dd = decomposition(u.grid)
    hat = spectral_data(u)
    total = 0.0
    for j in dd.block_range():
        nb = float(np.sum(np.abs(dd.block_mults[j + 1] * hat) ** 2))
        total += 4.0 ** (j * s) * nb
    return math.sqrt(total) * 2.0 * np.pi / u.grid.n**2


def sobolev_norms(u: ScalarField, s: float) -> tuple[float, float]:
    """Both H^s evaluators (direct, Littlewood-Paley)."""
    return sobolev_norm(u, s), sobolev_norm_lp(u, s)


def besov_norm(u: ScalarField, idx: BesovIndex) -> float:
    """||u||_{B^s_{p,r}}: the l^r norm over blocks of 2^(js) ||Delta_j u||_{L^p}."""
    dd = decomposition(u.grid)
    terms = []
    for j in dd.block_range():
        terms.append(2.0 ** (j * idx.s) * lp_norm(dyadic_block(u, j), idx.p))
    terms = np.asarray(terms)
    if np.isinf(idx.r):
        return float(terms.max())
    return float(np.sum(terms**idx.r) ** (1.0 / idx.r))


def _product(a: ScalarField, b: ScalarField) -> np.ndarray:
    """Plain grid product (exact convolution semantics, no dealiasing)."""
    return physical_data(a) * physical_data(b)


def paraproduct(u: ScalarField, v: ScalarField) -> ScalarField:
    """Bony paraproduct T_u v = sum_j S_{j-1} u * Delta_j v (physical-space products)."""
    dd = decomposition(u.grid)
    out = np.zeros((u.grid.n, u.grid.n))
    for j in range(1, dd.j_max + 1):
        out += _product(low_pass(u, j - 1), dyadic_block(v, j))
    return scalar(u.grid, out)


def remainder(u: ScalarField, v: ScalarField) -> ScalarField:
    """Bony remainder R(u, v): products of blocks at most one index apart."""
    dd = decomposition(u.grid)
    blocks_u = {j: dyadic_block(u, j) for j in dd.block_range()}
    blocks_v = {j: dyadic_block(v, j) for j in dd.block_range()}
    out = np.zeros((u.grid.n, u.grid.n))
    for j in dd.block_range():
        for jp in (j - 1, j, j + 1):
            if -1 <= jp <= dd.j_max:
                out += _product(blocks_u[j], blocks_v[jp])
    return scalar(u.grid, out)


def commutator_low_pass(a: ScalarField, f: ScalarField, M: int) -> ScalarField:
    """[S_M, a] f = S_M(a f) - a S_M(f)."""
    af = scalar(a.grid, _product(a, f))
    first = physical_data(low_pass(af, M))
    second = _product(a, low_pass(f, M))
    return scalar(a.grid, first - second)


@dataclass(frozen=True)
class BernsteinReport:
    j: int
    ratio: float
    constant: float
    passed: bool


def bernstein_check(u: ScalarField, j: int, constant: float = 4.0) -> BernsteinReport:
    """Check C^-1 2^j ||u|| <= ||grad u|| <= C 2^j ||u|| for a block-j annulus field."""
    grid = u.grid
    hat = spectral_data(u)
    lo, hi = 2.0 ** (j - 1), 2.0 ** (j + 1)
    outside = (grid.k_mag < lo - 1e-9) | (grid.k_mag > hi + 1e-9)
    scale = max(1.0, float(np.abs(hat).max()))
    if float(np.abs(hat[outside]).max(initial=0.0)) > 1e-12 * scale:
        raise ValueError(f"field has spectral content outside the block-{j} annulus")
    nu = l2_norm(u)
    ng = math.hypot(l2_norm(derivative(u, 0)), l2_norm(derivative(u, 1)))
    ratio = ng / (2.0**j * nu)
    return BernsteinReport(j, ratio, constant, 1.0 / constant <= ratio <= constant)


@dataclass(frozen=True)
class GagliardoNirenbergReport:
    p: float
    lam: float
    constant: float


def gagliardo_nirenberg_check(u: ScalarField, p: float) -> GagliardoNirenbergReport:
    """Empirical constant in ||u||_p <= C ||u||_2^(1-lam) ||grad u||_2^lam, lam = (p-2)/p."""
    if not p > 2.0:
        raise ValueError(f"exponent must exceed 2, got {p}")
    _require_zero_mean(u, "gagliardo_nirenberg_check")
    lam = (p - 2.0) / p
    num = lp_norm(u, p)
    den = l2_norm(u) ** (1.0 - lam) * math.hypot(
        l2_norm(derivative(u, 0)), l2_norm(derivative(u, 1))
    ) ** lam
    return GagliardoNirenbergReport(p, lam, num / den)
