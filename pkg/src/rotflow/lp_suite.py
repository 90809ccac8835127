"""The dyadic-analysis property suite behind the `lp-test` subcommand.

Each check returns (property, n, parameter, measured, bound, passed) rows on a
fixed seeded corpus, so the CLI output is reproducible bit for bit.
"""

from __future__ import annotations

import math

import numpy as np

from .fields import random_annulus_field, random_power_law_field, random_smooth_field
from .lp import (
    BesovIndex,
    bernstein_check,
    besov_norm,
    commutator_low_pass,
    decomposition,
    dyadic_block,
    gagliardo_nirenberg_check,
    low_pass,
    paraproduct,
    remainder,
    sobolev_norm,
    sobolev_norm_lp,
)
from .spectral import (
    get_grid,
    l2_norm,
    lp_norm,
    physical_data,
    scalar,
    spectral_data,
)


def _row(prop, n, param, measured, bound, passed):
    return (prop, n, str(param), float(measured), float(bound), "pass" if passed else "fail")


def partition_rows(n: int):
    dd = decomposition(get_grid(n))
    total = np.zeros((n, n))
    for j in dd.block_range():
        total = total + dd.block_mults[j + 1]
    dev = float(np.abs(total - 1.0).max())
    return [_row("partition_of_unity_max_dev", n, "-", dev, 0.0, dev == 0.0)]


def reconstruction_rows(n: int, seed: int = 101):
    grid = get_grid(n)
    rng = np.random.default_rng(seed)
    u = random_smooth_field(grid, rng, k_peak=n / 6.0)
    dd = decomposition(grid)
    hat = spectral_data(u)
    acc = np.zeros_like(hat)
    for j in dd.block_range():
        acc = acc + dd.block_mults[j + 1] * hat
    err = float(np.abs(acc - hat).max()) / max(1.0, float(np.abs(hat).max()))
    return [_row("block_reconstruction_rel_err", n, "-", err, 1e-13, err <= 1e-13)]


def lowpass_rows(n: int, seed: int = 102):
    grid = get_grid(n)
    rng = np.random.default_rng(seed)
    u = random_smooth_field(grid, rng, k_peak=n / 6.0)
    dd = decomposition(grid)
    rows = []
    for M in (1, dd.j_max // 2, dd.j_max + 1):
        sm = spectral_data(low_pass(u, M))
        acc = np.zeros_like(sm)
        for j in range(-1, M):
            if j <= dd.j_max:
                acc = acc + spectral_data(dyadic_block(u, j))
        err = float(np.abs(acc - sm).max()) / max(1.0, float(np.abs(sm).max()))
        rows.append(_row("lowpass_equals_block_sum", n, f"M={M}", err, 1e-13, err <= 1e-13))
    # tail decay of Id - S_M
    tails = [sobolev_norm(scalar(grid, physical_data(u) -
                                 physical_data(low_pass(u, M))), 1.0)
             for M in range(dd.j_max + 2)]
    mono = all(tails[i + 1] <= tails[i] + 1e-14 for i in range(len(tails) - 1))
    rows.append(_row("id_minus_lowpass_monotone", n, "H1", float(tails[-1]), 0.0,
                     mono and tails[-1] == 0.0))
    return rows


def bony_rows(n: int, seed: int = 103):
    grid = get_grid(n)
    rng = np.random.default_rng(seed)
    u = random_smooth_field(grid, rng, k_peak=n / 8.0)
    v = random_smooth_field(grid, rng, k_peak=n / 8.0)
    lhs = physical_data(u) * physical_data(v)
    rhs = (physical_data(paraproduct(u, v)) + physical_data(paraproduct(v, u))
           + physical_data(remainder(u, v)))
    err = float(np.abs(lhs - rhs).max())
    scale = max(1.0, float(np.abs(lhs).max()))
    return [_row("bony_identity_max_err", n, "-", err / scale, 1e-12, err / scale <= 1e-12)]


def bernstein_rows(n: int, seed: int = 104):
    grid = get_grid(n)
    rng = np.random.default_rng(seed)
    dd = decomposition(grid)
    rows = []
    for j in range(1, dd.j_max):
        rep = bernstein_check(random_annulus_field(grid, rng, j), j)
        rows.append(_row("bernstein_ratio", n, f"j={j}", rep.ratio, 4.0, rep.passed))
    return rows


def commutator_rows(n: int, seed: int = 105, m_range=(2, 3, 4, 5, 6)):
    grid = get_grid(n)
    rng = np.random.default_rng(seed)
    a = scalar(grid, 2.0 + np.sin(grid.x2))
    f = random_power_law_field(grid, rng, slope=-1.0)
    norms = [l2_norm(commutator_low_pass(a, f, M)) for M in m_range]
    slope = np.polyfit(m_range, np.log2(norms), 1)[0]
    ok = abs(slope + 1.0) <= 0.25
    return [_row("commutator_log2_slope", n, f"M={m_range[0]}..{m_range[-1]}",
                 float(slope), -1.0, ok)]


def sobolev_equivalence_rows(n: int, seed: int = 106):
    grid = get_grid(n)
    rng = np.random.default_rng(seed)
    rows = []
    for s in (0.0, 1.0):
        worst = 0.0
        for _ in range(4):
            u = random_smooth_field(grid, rng, k_peak=n / 8.0)
            direct = sobolev_norm(u, s)
            lpf = sobolev_norm_lp(u, s)
            ratio = lpf / direct
            worst = max(worst, ratio, 1.0 / ratio)
        rows.append(_row("sobolev_lp_equivalence", n, f"s={s}", worst, 4.0, worst <= 4.0))
    return rows


def besov_rows(n: int, seed: int = 107):
    grid = get_grid(n)
    rng = np.random.default_rng(seed)
    u = random_smooth_field(grid, rng, k_peak=n / 8.0)
    b = besov_norm(u, BesovIndex(0.0, 2.0, 2.0))
    l2 = l2_norm(u)
    ratio = max(b / l2, l2 / b)
    return [_row("besov022_vs_l2", n, "-", ratio, 4.0, ratio <= 4.0)]


def paraproduct_operator_rows(n: int, seed: int = 108, frozen_c: float = 3.0):
    """||T_u v||_{H^s} <= C ||u||_inf ||v||_{H^s} on a corpus; C frozen at 3."""
    grid = get_grid(n)
    rng = np.random.default_rng(seed)
    rows = []
    for s in (0.0, 1.0):
        worst = 0.0
        for _ in range(4):
            u = random_smooth_field(grid, rng, k_peak=n / 8.0)
            v = random_smooth_field(grid, rng, k_peak=n / 8.0)
            num = sobolev_norm(paraproduct(u, v), s)
            den = lp_norm(u, math.inf) * sobolev_norm(v, s)
            worst = max(worst, num / den)
        rows.append(_row("paraproduct_Hs_bound", n, f"s={s}", worst, frozen_c,
                         worst <= frozen_c))
    return rows


def product_continuity_rows(n: int, seed: int = 109):
    """Selected product-continuity cases: H^eta x H^1 -> L^2 (eta in (0,1]) and
    H^1 x H^1 -> H^(1-delta); constants frozen on the corpus."""
    grid = get_grid(n)
    rng = np.random.default_rng(seed)
    rows = []
    worst_iii = 0.0
    worst_v = 0.0
    for _ in range(4):
        a = random_smooth_field(grid, rng, k_peak=n / 8.0)
        w = random_smooth_field(grid, rng, k_peak=n / 8.0)
        prod = scalar(grid, physical_data(a) * physical_data(w))
        worst_iii = max(worst_iii,
                        l2_norm(prod) / (sobolev_norm(a, 0.5) * sobolev_norm(w, 1.0)))
        worst_v = max(worst_v,
                      sobolev_norm(prod, 0.9)
                      / (sobolev_norm(a, 1.0) * sobolev_norm(w, 1.0)))
    rows.append(_row("product_H0.5xH1_to_L2", n, "case iii", worst_iii, 2.0,
                     worst_iii <= 2.0))
    rows.append(_row("product_H1xH1_to_H0.9", n, "case v", worst_v, 2.0,
                     worst_v <= 2.0))
    return rows


def gagliardo_nirenberg_rows(n: int, seed: int = 110):
    grid = get_grid(n)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(6):
        u = random_smooth_field(grid, rng, k_peak=n / 8.0)
        worst = max(worst, gagliardo_nirenberg_check(u, 4.0).constant)
    return [_row("gagliardo_nirenberg_p4", n, "lam=1/2", worst, 1.0, worst <= 1.0)]


def full_suite(sizes=(64, 128)):
    rows = []
    for n in sizes:
        rows += partition_rows(n)
        rows += reconstruction_rows(n)
        rows += lowpass_rows(n)
        rows += bony_rows(n)
        rows += bernstein_rows(n)
        rows += sobolev_equivalence_rows(n)
        rows += besov_rows(n)
        rows += paraproduct_operator_rows(n)
        rows += product_continuity_rows(n)
        rows += gagliardo_nirenberg_rows(n)
    rows += commutator_rows(256)
    return rows
