"""Pseudospectral simulation and Floquet stability analysis of 180-degree Neel walls."""

from __future__ import annotations

__version__ = "0.1.0"

from .config import RunConfig, dump, parse_config
from .dynamics import Forcing, LinearStepper, NonlinearStepper, evolve, step_linear, step_nonlinear
from .energy import energy, energy_gradient, hessian_apply
from .errors import NeelError
from .floquet import floquet_multipliers, monodromy_apply
from .grid import Grid
from .linear_ops import assemble_matrix, smallest_eigenpairs
from .periodic_orbit import extract_translation, find_periodic_wall, leading_order_Y
from .static_wall import StaticWall, solve_static_profile

__all__ = [
    "Forcing", "Grid", "LinearStepper", "NeelError", "NonlinearStepper", "RunConfig", "StaticWall",
    "assemble_matrix", "dump", "energy", "energy_gradient", "evolve", "extract_translation",
    "find_periodic_wall", "floquet_multipliers", "hessian_apply", "leading_order_Y", "monodromy_apply",
    "parse_config", "smallest_eigenpairs", "solve_static_profile", "step_linear", "step_nonlinear",
]
