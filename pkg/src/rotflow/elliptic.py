"""Variable-coefficient pressure solves: preconditioned Richardson iteration and the
density-weighted divergence-free projection."""

from __future__ import annotations

import numpy as np

from .spectral import Grid


class EllipticError(RuntimeError):
    """Richardson iteration failed to reach tolerance within max_iter."""


class DensityContext:
    """Per-step density snapshot with the derived quantities the solvers need."""

    def __init__(self, rho: np.ndarray):
        self.rho = rho
        self.rho_min = float(rho.min())
        self.rho_max = float(rho.max())
        self.rho_mean = float(rho.mean())
        self.is_constant = (self.rho_max - self.rho_min) <= 1e-13 * self.rho_max
        self.inv_rho = 1.0 / rho
        self.sqrt_rho = np.sqrt(rho)


class WeightedPoissonSolver:
    """Solve div((1/rho) grad pi) = g on the torus.

    Richardson iteration preconditioned by the constant-coefficient inverse
    Laplacian with weight 1/rho_mean; damping chosen from the density extremes,
    which gives a contraction factor (kappa - 1)/(kappa + 1), kappa = rho_max/rho_min.
    Convergence requires 0 < rho_min <= rho <= rho_max.  Keeps a warm start.
    """

    def __init__(self, grid: Grid, tol: float = 1e-10, max_iter: int = 500):
        self.grid = grid
        self.tol = tol
        self.max_iter = max_iter
        self._k2_safe = np.where(grid.k2 == 0.0, 1.0, grid.k2)
        self._warm = None
        self.last_iterations = 0

    def _apply(self, pi_hat: np.ndarray, inv_rho: np.ndarray) -> np.ndarray:
        g = self.grid
        gx = np.fft.ifft2(g.ikx * pi_hat).real
        gy = np.fft.ifft2(g.iky * pi_hat).real
        return g.ikx * np.fft.fft2(inv_rho * gx) + g.iky * np.fft.fft2(inv_rho * gy)

    def _l2(self, hat: np.ndarray) -> float:
        return float(np.sqrt(np.sum(np.abs(hat) ** 2))) * 2.0 * np.pi / self.grid.n**2

    def solve(self, g_hat: np.ndarray, ctx: DensityContext):
        """Return (pi_hat, iterations); pi has zero mean.  g must have zero mean."""
        if ctx.is_constant:
            pi_hat = -ctx.rho_mean * g_hat / self._k2_safe
            pi_hat[0, 0] = 0.0
            self.last_iterations = 0
            return pi_hat, 0

        if self._l2(g_hat) <= self.tol:
            self.last_iterations = 0
            return np.zeros_like(g_hat), 0

        omega = 2.0 / (ctx.rho_mean / ctx.rho_max + ctx.rho_mean / ctx.rho_min)
        pi_hat = self._warm.copy() if self._warm is not None else np.zeros_like(g_hat)
        for it in range(1, self.max_iter + 1):
            residual = g_hat - self._apply(pi_hat, ctx.inv_rho)
            residual[0, 0] = 0.0
            if self._l2(residual) <= self.tol:
                self._warm = pi_hat
                self.last_iterations = it - 1
                return pi_hat, it - 1
            pi_hat = pi_hat + omega * (-ctx.rho_mean) * residual / self._k2_safe
            pi_hat[0, 0] = 0.0
        raise EllipticError(
            f"weighted Poisson solve did not reach {self.tol:g} in {self.max_iter} iterations"
        )


class WeightedProjector:
    """Project a velocity onto the divergence-free space along (1/rho)-weighted gradients.

    This is the orthogonal projection in the rho-weighted inner product, so it
    is non-expansive in the weighted energy.  For constant density it reduces
    to the Leray projection, solved directly in spectral space.
    """

    def __init__(self, grid: Grid, tol: float = 1e-10, max_iter: int = 500):
        self.grid = grid
        self.solver = WeightedPoissonSolver(grid, tol, max_iter)
        self.last_iterations = 0

    def project_hat(self, u1_hat, u2_hat, ctx: DensityContext):
        """Spectral in, spectral out."""
        g = self.grid
        div_hat = g.ikx * u1_hat + g.iky * u2_hat
        if ctx.is_constant:
            # plain Leray projection per mode
            k2 = np.where(g.k2 == 0.0, 1.0, g.k2)
            kdotv = (g.kx * u1_hat + g.ky * u2_hat) / k2
            kdotv[0, 0] = 0.0
            self.last_iterations = 0
            return u1_hat - g.kx * kdotv, u2_hat - g.ky * kdotv
        pi_hat, its = self.solver.solve(div_hat, ctx)
        self.last_iterations = its
        gx = np.fft.ifft2(g.ikx * pi_hat).real
        gy = np.fft.ifft2(g.iky * pi_hat).real
        p1 = u1_hat - np.fft.fft2(ctx.inv_rho * gx)
        p2 = u2_hat - np.fft.fft2(ctx.inv_rho * gy)
        return p1, p2
