from __future__ import annotations

import numpy as np
import pytest

from neel.energy import energy_gradient
from neel.errors import NonConvergence
from neel.grid import Grid
from neel.linear_ops import apply_L0
from neel.static_wall import _precondition, solve_static_profile, translation_mode


def test_profile_invariants(wall_small):
    g = wall_small.grid
    th = wall_small.theta0
    i0 = int(np.argmin(np.abs(g.x)))
    assert abs(th[i0]) <= 1e-10
    # theta0 winds by pi, so its reflection uses the antiperiodic convention at x = -L
    assert np.max(np.abs(g.reflect_anti(th) + th)) <= 1e-8
    assert np.all(wall_small.dtheta0 > 0)
    assert wall_small.residual <= 1e-10


def test_descent_energies_decrease(wall_small):
    e = np.asarray(wall_small.descent_energies)
    assert e.size > 2
    assert np.all(np.diff(e) <= 0)


def test_default_tolerance_reached():
    wall = solve_static_profile(Grid(30.0, 512))
    assert wall.residual <= 1e-8
    assert wall.grid.norm(energy_gradient(wall.grid, wall.w0)) == pytest.approx(wall.residual)


def test_nonconvergence_reports_history():
    with pytest.raises(NonConvergence) as info:
        solve_static_profile(Grid(30.0, 512), tol=1e-14, max_iter=0)
    rec = info.value.record()
    assert rec["error"] == "NonConvergence"
    assert rec["details"]["last_residual"] > 1e-14


def test_translation_mode_properties(wall_small):
    g = wall_small.grid
    d = translation_mode(wall_small)
    assert np.max(np.abs(d - g.reflect(d))) <= 1e-8
    assert g.dx * np.sum(d) == pytest.approx(np.pi, abs=1e-10)
    assert g.norm(apply_L0(wall_small, d)) <= 1e-6


def test_unconstrained_flow_preserves_oddness():
    g = Grid(30.0, 512)
    w = np.zeros(g.N)
    for _ in range(400):
        w = w - 0.05 * _precondition(g, energy_gradient(g, w))
    assert g.norm(energy_gradient(g, w)) < 1e-5
    assert np.max(np.abs(w - g.odd_part(w))) <= 1e-8


def test_energy_stable_under_box_refinement(wall_small):
    fine = solve_static_profile(Grid(60.0, 2048), tol=1e-10)
    assert fine.energy_value == pytest.approx(wall_small.energy_value, rel=1e-3)
    assert fine.norm_sq_dtheta0 == pytest.approx(wall_small.norm_sq_dtheta0, rel=1e-2)


def test_golden_numbers_at_default_grid():
    # recorded from the first converged solve at (L, N) = (60, 4096)
    wall = solve_static_profile(Grid(60.0, 4096))
    assert wall.energy_value == pytest.approx(2.4143340, rel=1e-6)
    assert wall.norm_sq_dtheta0 == pytest.approx(2.0229358, rel=1e-6)
