"""Static wall profile: constrained energy minimization on the odd subspace."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .energy import energy, energy_gradient, hessian_apply, linearization_coefficients
from .errors import NonConvergence
from .grid import Grid

log = logging.getLogger(__name__)


@dataclass
class StaticWall:
    grid: Grid
    w0: np.ndarray
    dtheta0: np.ndarray
    residual: float
    energy_value: float
    norm_sq_dtheta0: float
    descent_energies: list = field(default_factory=list, repr=False)
    newton_residuals: list = field(default_factory=list, repr=False)

    @property
    def theta0(self) -> np.ndarray:
        return self.grid.theta_ref + self.w0

    @property
    def translation_unit(self) -> np.ndarray:
        """``dtheta0`` normalized in L2."""
        return self.dtheta0 / np.sqrt(self.norm_sq_dtheta0)

    def coefficients(self):
        """``(sin theta0, c_theta0)`` cached on first use."""
        if not hasattr(self, "_coeffs"):
            self._coeffs = linearization_coefficients(self.grid, self.theta0)
        return self._coeffs

    def project_out_translation(self, u):
        e = self.translation_unit
        return u - np.multiply.outer(self.grid.inner(u, e), e) if np.ndim(u) > 1 else u - self.grid.inner(u, e) * e


def _precondition(grid: Grid, r):
    # inverse of (1 - d_xx), spectrally
    return grid.multiply(r, 1.0 / (1.0 - grid._d2))


def solve_static_profile(grid: Grid, tol: float = 1e-8, max_iter: int = 200,
                         descent_tol: float = 1e-3, max_descent: int = 2000) -> StaticWall:
    """Minimize the wall energy starting from ``theta_ref``.

    Preconditioned gradient descent with Armijo backtracking brings the
    gradient below ``descent_tol``; Newton steps with a preconditioned CG
    inner solve on odd fields then polish to ``tol`` (L2 norm of the gradient).
    ``max_iter`` bounds the Newton phase.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    w = np.zeros(grid.N)
    E = energy(grid, w)
    g = grid.odd_part(energy_gradient(grid, w))
    gnorm = grid.norm(g)
    energies = [E]
    it = 0
    while gnorm > descent_tol and it < max_descent:
        p = -grid.odd_part(_precondition(grid, g))
        slope = grid.inner(g, p)
        alpha = 1.0
        while True:
            w_try = w + alpha * p
            E_try = energy(grid, w_try)
            if E_try <= E + 1e-4 * alpha * slope or alpha < 1e-8:
                break
            alpha *= 0.5
        if E_try > E:
            break
        w, E = w_try, E_try
        g = grid.odd_part(energy_gradient(grid, w))
        gnorm = grid.norm(g)
        energies.append(E)
        it += 1
    log.debug("descent: %d iterations, |grad| = %.3e", it, gnorm)

    newton = [gnorm]
    shape = (grid.N, grid.N)
    M = LinearOperator(shape, matvec=lambda r: grid.odd_part(_precondition(grid, r)), dtype=float)
    for k in range(max_iter):
        # polish a decade past tol when Newton is still contracting
        if gnorm <= 0.1 * tol or (gnorm <= tol and len(newton) > 1 and gnorm > 0.5 * newton[-2]):
            break
        H = LinearOperator(shape, matvec=lambda u, w=w: grid.odd_part(hessian_apply(grid, w, grid.odd_part(u))),
                           dtype=float)
        inner_tol = min(1e-2, max(1e-12, 0.1 * tol / gnorm))
        dw, _ = cg(H, -g, rtol=inner_tol, atol=0.0, M=M, maxiter=500)
        dw = grid.odd_part(dw)
        step = 1.0
        while step > 1e-4:
            w_try = w + step * dw
            g_try = grid.odd_part(energy_gradient(grid, w_try))
            if grid.norm(g_try) < gnorm:
                break
            step *= 0.5
        w = w_try
        g = g_try
        gnorm = grid.norm(g)
        newton.append(gnorm)
        log.debug("newton %d: |grad| = %.3e", k, gnorm)
    if gnorm > tol:
        raise NonConvergence(len(newton) - 1, gnorm, newton, hint="refine the grid or raise max_iter")

    dtheta = grid.dtheta_ref + grid.derivative(w)
    return StaticWall(
        grid=grid,
        w0=w,
        dtheta0=dtheta,
        residual=float(grid.norm(energy_gradient(grid, w))),
        energy_value=energy(grid, w),
        norm_sq_dtheta0=float(grid.inner(dtheta, dtheta)),
        descent_energies=energies,
        newton_residuals=newton,
    )


def translation_mode(wall: StaticWall) -> np.ndarray:
    return wall.dtheta0
