"""Thin-film wall energy of a phase profile, its L2 gradient and Hessian action.

A phase is passed as its decaying part ``w`` with ``theta = theta_ref + w``;
``reference=False`` treats ``w`` itself as the (periodic) phase, which is how
spatially constant states are represented.  With the reference the phase winds
by pi across the box, so ``|D|`` acts on ``cos theta`` and ``u sin theta`` as
antiperiodic fields; without it those fields are periodic.

    E(theta) = 1/2 ( ||theta'||^2 + ||cos theta||^2_{H^1/2 dot} + ||cos theta||^2 )
    grad E   = -theta'' - sin theta (1 + |D|) cos theta
    Hess E u = -u'' + s (1 + |D|)(s u) - c u,   s = sin theta,
               c = cos theta (1 + |D|) cos theta
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .grid import Grid


class EnergyTerms(NamedTuple):
    dirichlet: float
    nonlocal_: float
    l2: float

    @property
    def total(self) -> float:
        return 0.5 * (self.dirichlet + self.nonlocal_ + self.l2)


def nonlocal_apply(grid: Grid, f, reference: bool = True):
    """``(1 + |D|) f`` for a field built from ``cos theta`` or ``sin theta``."""
    if reference:
        return grid.one_plus_half_laplacian_anti(f)
    return grid.one_plus_half_laplacian(f)


def phase(grid: Grid, w, reference: bool = True):
    """Return ``(theta, theta_x)`` sampled on the grid."""
    if reference:
        return grid.theta_ref + w, grid.dtheta_ref + grid.derivative(w)
    return np.asarray(w, dtype=float), grid.derivative(w)


def energy_terms(grid: Grid, w, reference: bool = True) -> EnergyTerms:
    theta, dtheta = phase(grid, w, reference)
    c = np.cos(theta)
    return EnergyTerms(
        float(grid.inner(dtheta, dtheta)),
        float(grid.inner(c, (grid.half_laplacian_anti if reference else grid.half_laplacian)(c))),
        float(grid.inner(c, c)),
    )


def energy(grid: Grid, w, reference: bool = True) -> float:
    return energy_terms(grid, w, reference).total


def energy_gradient(grid: Grid, w, reference: bool = True) -> np.ndarray:
    theta, dtheta = phase(grid, w, reference)
    return -grid.derivative(dtheta) - np.sin(theta) * nonlocal_apply(grid, np.cos(theta), reference)


def linearization_coefficients(grid: Grid, theta, reference: bool = True):
    """``(sin theta, cos theta (1+|D|) cos theta)`` for a sampled phase."""
    c = np.cos(theta)
    return np.sin(theta), c * nonlocal_apply(grid, c, reference)


def hessian_apply(grid: Grid, w, u, reference: bool = True) -> np.ndarray:
    theta, _ = phase(grid, w, reference)
    s, cc = linearization_coefficients(grid, theta, reference)
    return -grid.second_derivative(u) + s * nonlocal_apply(grid, s * u, reference) - cc * u
