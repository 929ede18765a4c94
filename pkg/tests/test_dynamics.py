from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neel.dynamics import (Forcing, LinearStepper, NonlinearStepper, evolve, evolve_checked,
                           hypocoercivity_functionals, observed_order, orthogonal_part, propagate,
                           step_linear, step_nonlinear)
from neel.errors import BlowUp, ForcingError
from neel.linear_ops import EnergyNorm, LinearContext
from neel.periodic_orbit import reflect_state

NU = 0.5


def bump(g, center=0.0, width=2.0):
    return np.exp(-((g.x - center) / width) ** 2)


def static_state(wall):
    return np.stack([wall.w0, np.zeros(wall.grid.N)])


# -- forcing ------------------------------------------------------------------

def test_cosine_forcing_is_antiperiodic():
    f = Forcing("cosine", 0.7, 2.0)
    t = np.linspace(0, 2.0, 1000, endpoint=False)
    assert np.max(np.abs(f(t) + f(t + 1.0))) <= 1e-10
    assert f(0.0) == pytest.approx(0.7)
    assert f.max_abs() == pytest.approx(0.7)


def test_odd_harmonics_forcing():
    f = Forcing("odd_harmonics", 1.0, 1.0, harmonics=[(1, 1.0, 0.0), (3, 0.0, 0.5)])
    assert f(0.25) == pytest.approx(np.cos(np.pi / 2) + 0.5 * np.sin(1.5 * np.pi))
    with pytest.raises(ForcingError):
        Forcing("odd_harmonics", 1.0, 1.0, harmonics=[(2, 1.0, 0.0)])


def test_custom_samples_forcing():
    t = np.arange(64) / 64
    ok = Forcing("custom_samples", 1.0, 1.0, samples=np.sin(2 * np.pi * t) + 0.2 * np.cos(6 * np.pi * t))
    assert ok(0.3) == pytest.approx(np.sin(0.6 * np.pi) + 0.2 * np.cos(1.8 * np.pi), abs=1e-12)
    harm = {n: (a, b) for n, a, b in ok.harmonics() if abs(a) + abs(b) > 1e-12}
    assert set(harm) == {1, 3}
    with pytest.raises(ForcingError):
        Forcing("custom_samples", 1.0, 1.0, samples=np.sin(2 * np.pi * t) + 0.1)
    with pytest.raises(ForcingError):
        Forcing("sawtooth")


# -- nonlinear stepper ----------------------------------------------------------

def test_static_wall_is_a_fixed_point(wall_small):
    s = static_state(wall_small)
    out = step_nonlinear(wall_small.grid, s, 0.0, 1.0 / 1024)
    assert np.max(np.abs(out - s)) <= 1e-10


def test_period_map_at_zero_epsilon_returns_static_wall(wall_small, forcing):
    s = static_state(wall_small)
    st_ = NonlinearStepper(wall_small.grid, 1.0 / 256, 0.0, NU, forcing)
    assert np.max(np.abs(propagate(st_, s, 0.0, 1.0) - s)) <= 1e-9


def test_nonlinear_self_convergence_order(wall_small, forcing):
    g = wall_small.grid
    s0 = static_state(wall_small)
    s0[0] += 0.05 * g.odd_part(bump(g, 1.0))
    s0[1] += 0.05 * bump(g, -2.0)
    order, e1, e2 = observed_order(lambda dt: NonlinearStepper(g, dt, 0.02, NU, forcing), s0, 0.0, 0.5, 1.0 / 64)
    assert order >= 1.9


def test_blowup_is_reported(grid_small):
    s = np.stack([1e4 * np.sin(np.pi * grid_small.x / grid_small.L), np.zeros(grid_small.N)])
    with pytest.raises(BlowUp):
        step_nonlinear(grid_small, s, 0.0, 1e-3)


def test_split_evolution_is_bitwise_identical(wall_small, forcing):
    g = wall_small.grid
    st_ = NonlinearStepper(g, 1.0 / 128, 0.01, NU, forcing)
    s0 = static_state(wall_small)
    whole = evolve(st_, s0, 0.0, 0.5).final
    first = evolve(st_, s0, 0.0, 0.25).final
    second = evolve(st_, first, 0.25, 0.5).final
    assert np.array_equal(whole, second)


def test_half_period_reflection_equivariance(wall_small, forcing, rng):
    # S P_{t0 -> t0 + tau} = P_{t0 + T/2 -> t0 + T/2 + tau} S when H(t + T/2) = -H(t).
    # Exact except at the x = -L node, where eps H cos(theta) jumps by the wall's tail value.
    g = wall_small.grid
    st_ = NonlinearStepper(g, 1.0 / 128, 0.02, NU, forcing)
    s0 = static_state(wall_small)
    s0[0] += 0.05 * bump(g, 1.5)
    s0[1] += 0.05 * bump(g, -0.5)
    a = reflect_state(g, propagate(st_, s0, 0.0, 0.25))
    b = propagate(st_, reflect_state(g, s0), 0.5, 0.75)
    assert np.max(np.abs(a - b)) <= 1e-8


def test_linear_regime_matches_linearized_dynamics(wall_small, forcing):
    g = wall_small.grid
    eps = 1e-5
    dt = 1.0 / 512
    s0 = static_state(wall_small)
    nonlin = propagate(NonlinearStepper(g, dt, eps, NU, forcing), s0, 0.0, 1.0) - s0
    s, cc = wall_small.coefficients()
    ctx = LinearContext(g, s, cc, NU, eps, forcing, 1.0, wall_small)
    lin = propagate(LinearStepper(ctx, dt, source=np.cos(wall_small.theta0)), np.zeros_like(s0), 0.0, 1.0)
    assert g.norm(nonlin[0] - lin[0]) <= 0.01 * g.norm(lin[0])


# -- linear stepper -------------------------------------------------------------

def test_linear_stepper_examples(wall_small, rng):
    g = wall_small.grid
    ctx = LinearContext.from_wall(wall_small, NU)
    dt = 1.0 / 512
    z = np.zeros((2, g.N))
    assert np.array_equal(step_linear(z, 0.0, dt, ctx), z)
    kern = np.stack([wall_small.dtheta0, np.zeros(g.N)])
    assert np.max(np.abs(step_linear(kern, 0.0, dt, ctx) - kern)) <= 1e-8


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_linear_superposition(orbit_small, seed, alpha, beta):
    g = orbit_small.grid
    ctx = orbit_small.linear_context()
    r = np.random.default_rng(seed)
    s1 = r.standard_normal((2, g.N))
    s2 = r.standard_normal((2, g.N))
    dt = orbit_small.dt
    lhs = step_linear(alpha * s1 + beta * s2, 0.3, dt, ctx)
    rhs = alpha * step_linear(s1, 0.3, dt, ctx) + beta * step_linear(s2, 0.3, dt, ctx)
    assert np.max(np.abs(lhs - rhs)) <= 1e-10 * max(1.0, np.max(np.abs(lhs)))


def test_linear_self_convergence_order(orbit_small):
    g = orbit_small.grid
    ctx = orbit_small.linear_context()
    s0 = np.stack([bump(g, 0.5), -bump(g, 1.0)])
    order, _, _ = observed_order(lambda dt: LinearStepper(ctx, dt), s0, 0.0, 0.5, 1.0 / 64)
    assert order >= 1.9


def test_evolve_checked_halves_when_needed(wall_small, forcing):
    g = wall_small.grid
    s0 = static_state(wall_small)
    s0[1] += 0.1 * bump(g)
    make = lambda dt: NonlinearStepper(g, dt, 0.01, NU, forcing)  # noqa: E731
    _, loose = evolve_checked(make, s0, 0.0, 0.25, 1.0 / 64, tol=1.0)
    assert not loose.halved and loose.dt == 1.0 / 64
    traj, tight = evolve_checked(make, s0, 0.0, 0.25, 1.0 / 64, tol=1e-14)
    assert tight.halved and traj.dt == 1.0 / 128


# -- hypocoercivity functionals ---------------------------------------------------

def test_functionals_examples(wall_small):
    g = wall_small.grid
    f, gg = hypocoercivity_functionals(np.zeros((2, g.N)), wall_small, NU)
    assert f == 0.0 and gg == 0.0
    f, gg = hypocoercivity_functionals(np.stack([wall_small.dtheta0, np.zeros(g.N)]), wall_small, NU)
    assert f == pytest.approx(0.5 * NU**2 * wall_small.norm_sq_dtheta0, rel=1e-9)
    assert abs(gg) <= 1e-9


@pytest.fixture(scope="module")
def free_decay(wall_small):
    g = wall_small.grid
    ctx = LinearContext.from_wall(wall_small, NU)
    u0 = wall_small.project_out_translation(g.odd_part(bump(g, 1.0)) + 0.5 * bump(g, 0.0, 3.0))
    s0 = np.stack([u0, np.zeros(g.N)])
    return evolve(LinearStepper(ctx, 1.0 / 256), s0, 0.0, 6.0, record_every=1, wall=wall_small, nu=NU)


def test_free_decay_dissipation_identity(free_decay):
    t = free_decay.times
    f = free_decay.diagnostics["f"]
    g = free_decay.diagnostics["g"]
    dfdt = np.diff(f) / np.diff(t)
    gmid = 0.5 * (g[1:] + g[:-1])
    assert np.max(np.abs(dfdt + gmid)) <= 0.02 * np.max(g)


def test_damping_monotonicity(wall_small, free_decay):
    z = EnergyNorm(wall_small)
    states = orthogonal_part(wall_small, free_decay.states)
    e = np.array([z.norm_sq(s) for s in states])
    assert np.all(np.diff(e) <= 1e-10 * e[0])
    assert e[-1] < 0.5 * e[0]
