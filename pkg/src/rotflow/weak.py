"""Weak-formulation residuals of the mass and momentum equations along a trajectory.

Test functions are separable: a band-limited spatial part times a smooth
compactly supported time window.  Divergence-free vector test functions are
generated as rotated gradients of the scalar part.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import ScalarField, derivative, perp_gradient, physical_data, scalar
from .windows import PolyWindow, window_bank


@dataclass(frozen=True)
class SpaceTimeTest:
    space: ScalarField
    window: PolyWindow


def _check_support(phi: SpaceTimeTest, t_end: float):
    if phi.window.t1 > t_end + 1e-12:
        raise ValueError(
            f"test function window [{phi.window.t0}, {phi.window.t1}] is not "
            f"compactly supported in [0, {t_end})"
        )


def weak_residual_mass(result, phi: SpaceTimeTest) -> float:
    """|  -int (rho dphi/dt + rho u . grad phi) - int rho0 phi(0) |."""
    _check_support(phi, float(result.times[-1]))
    grid = result.grid
    p = physical_data(phi.space)
    gp1 = physical_data(derivative(phi.space, 0))
    gp2 = physical_data(derivative(phi.space, 1))
    times = result.times
    wt = phi.window(times)
    dwt = phi.window.derivative(times)

    vals = np.empty(len(times))
    for m in range(len(times)):
        rho = physical_data(result.rhos[m])
        u1 = physical_data(result.us[m].u1)
        u2 = physical_data(result.us[m].u2)
        a = np.sum(rho * p) * grid.cell_area
        b = np.sum(rho * (u1 * gp1 + u2 * gp2)) * grid.cell_area
        vals[m] = a * dwt[m] + b * wt[m]
    interior = -np.trapezoid(vals, times)
    rho0 = physical_data(result.rhos[0])
    data_term = float(np.sum(rho0 * p) * grid.cell_area) * float(phi.window(0.0))
    return abs(interior - data_term)


def weak_residual_momentum(result, phi: SpaceTimeTest) -> float:
    """Residual of the momentum weak form tested on psi = perp-grad(phi) * w(t),
    including the (1/epsilon) rho u-perp term."""
    _check_support(phi, float(result.times[-1]))
    grid = result.grid
    cfg = result.config
    psi = perp_gradient(phi.space)
    psi1 = physical_data(psi.u1)
    psi2 = physical_data(psi.u2)
    dpsi = [[physical_data(derivative(psi.u1, 0)), physical_data(derivative(psi.u2, 0))],
            [physical_data(derivative(psi.u1, 1)), physical_data(derivative(psi.u2, 1))]]
    times = result.times
    wt = phi.window(times)
    dwt = phi.window.derivative(times)

    vals = np.empty(len(times))
    for m in range(len(times)):
        rho = physical_data(result.rhos[m])
        u1 = physical_data(result.us[m].u1)
        u2 = physical_data(result.us[m].u2)
        uu = [u1, u2]
        time_term = np.sum(rho * (u1 * psi1 + u2 * psi2)) * grid.cell_area
        convect = 0.0
        viscous = 0.0
        for i in range(2):
            for j in range(2):
                duj = physical_data(derivative(result.us[m].u1 if j == 0 else result.us[m].u2, i))
                convect += np.sum(rho * uu[i] * uu[j] * dpsi[i][j])
                viscous += np.sum(duj * dpsi[i][j])
        convect *= grid.cell_area
        viscous *= grid.cell_area
        coriolis = np.sum(rho * (-u2 * psi1 + u1 * psi2)) * grid.cell_area
        vals[m] = (-time_term * dwt[m]
                   + (-convect + coriolis / cfg.epsilon + cfg.nu * viscous) * wt[m])
    interior = np.trapezoid(vals, times)
    rho0 = physical_data(result.rhos[0])
    u1_0 = physical_data(result.us[0].u1)
    u2_0 = physical_data(result.us[0].u2)
    data_term = (float(np.sum(rho0 * (u1_0 * psi1 + u2_0 * psi2)) * grid.cell_area)
                 * float(phi.window(0.0)))
    return abs(interior - data_term)


def standard_test_bank(grid, t_end: float, windows: int = 3) -> list:
    """Fixed spatial modes crossed with a few interior windows."""
    spaces = [
        scalar(grid, np.cos(grid.x2)),
        scalar(grid, np.sin(grid.x1)),
        scalar(grid, np.cos(grid.x1 + grid.x2)),
        scalar(grid, np.sin(2.0 * grid.x1) * np.cos(grid.x2)),
    ]
    bank = []
    for w in window_bank(t_end, windows, q=4, overlap=2.0):
        for p in spaces:
            bank.append(SpaceTimeTest(p, w))
    return bank
