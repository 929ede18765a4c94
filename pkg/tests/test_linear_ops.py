from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neel.energy import hessian_apply
from neel.errors import DenseCapExceeded
from neel.grid import Grid
from neel.linear_ops import (EnergyNorm, LinearContext, State, apply_A, apply_L0, assemble_matrix,
                             match_spectra, quadratic_roots, smallest_eigenpairs, spectral_gap)
from neel.periodic_orbit import continue_orbit
from neel.static_wall import solve_static_profile

NU = 0.5


@pytest.fixture(scope="module")
def L0(wall_small):
    return assemble_matrix("L0", wall_small)


@pytest.fixture(scope="module")
def eig(L0):
    return smallest_eigenpairs(L0, 10)


def test_L0_annihilates_translation_mode(wall_small):
    g = wall_small.grid
    assert g.norm(apply_L0(wall_small, wall_small.dtheta0)) <= 1e-6


def test_L0_agrees_with_hessian(wall_small, rng):
    u = rng.standard_normal(wall_small.grid.N)
    a = apply_L0(wall_small, u)
    b = hessian_apply(wall_small.grid, wall_small.w0, u)
    assert np.max(np.abs(a - b)) <= 1e-12 * max(1.0, np.max(np.abs(a)))


def test_L0_matrix_symmetric(L0):
    assert L0.is_symmetric(1e-9)


def test_A0_is_block_arrangement_of_L0(wall_small, L0):
    A0 = assemble_matrix("A0", wall_small, nu=NU).entries
    N = wall_small.grid.N
    assert np.array_equal(A0[:N, :N], np.zeros((N, N)))
    assert np.array_equal(A0[:N, N:], np.eye(N))
    assert np.array_equal(A0[N:, :N], -L0.entries)
    assert np.array_equal(A0[N:, N:], -NU * np.eye(N))


def test_dense_cap():
    wall = solve_static_profile(Grid(30.0, 512))
    with pytest.raises(DenseCapExceeded):
        assemble_matrix("L0", wall, cap=256)


def test_smallest_eigenpairs(wall_small, eig):
    g = wall_small.grid
    phi0 = eig.vectors[0]
    d = wall_small.dtheta0
    assert abs(eig.values[0]) <= 1e-6
    assert abs(g.inner(phi0, d)) / (g.norm(phi0) * g.norm(d)) >= 1 - 1e-6
    Lam0 = eig.values[1]
    assert Lam0 > 0
    assert np.all(eig.values[1:] >= Lam0 - 1e-8)
    assert np.max(eig.residuals) <= 1e-8


def test_spectral_floor_stable_under_refinement(eig):
    fine = solve_static_profile(Grid(60.0, 1024), tol=1e-10)
    lam = smallest_eigenpairs(assemble_matrix("L0", fine), 3).values
    # Lambda_0 sits at the bottom of the essential spectrum, which moves like 1/L
    assert lam[1] == pytest.approx(eig.values[1], rel=0.05)


def test_coercivity_on_random_orthogonal_fields(wall_small, eig):
    g = wall_small.grid
    Lam0 = eig.values[1]
    rng = np.random.default_rng(7)
    for _ in range(100):
        u = wall_small.project_out_translation(rng.standard_normal(g.N))
        assert g.inner(apply_L0(wall_small, u), u) >= (Lam0 - 1e-8) * g.inner(u, u)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_coercivity_on_odd_fields(wall_small, eig, seed):
    g = wall_small.grid
    u = g.odd_part(np.random.default_rng(seed).standard_normal(g.N))
    u = wall_small.project_out_translation(u)
    assert g.inner(apply_L0(wall_small, u), u) >= (eig.values[1] - 1e-8) * g.inner(u, u)


def test_A0_spectrum_matches_quadratic_roots():
    wall = solve_static_profile(Grid(30.0, 256), tol=1e-10)
    L = assemble_matrix("L0", wall).entries
    lam_L = np.linalg.eigvalsh(0.5 * (L + L.T))
    ev = np.linalg.eigvals(assemble_matrix("A0", wall, nu=NU).entries)
    assert np.max(match_spectra(ev, quadratic_roots(lam_L, NU))) <= 1e-6
    assert spectral_gap(ev, NU) > 0


def test_apply_A_at_zero_epsilon_matches_A0(wall_small, rng):
    ctx = LinearContext.from_wall(wall_small, NU)
    A0 = assemble_matrix("A0", wall_small, nu=NU).entries
    s = rng.standard_normal((2, wall_small.grid.N))
    got = apply_A(0.3, s, ctx).reshape(-1)
    want = A0 @ s.reshape(-1)
    assert np.max(np.abs(got - want)) <= 1e-10 * max(1.0, np.max(np.abs(want)))


def test_apply_A_is_T_periodic(orbit_small, rng):
    ctx = orbit_small.linear_context()
    s = rng.standard_normal((2, orbit_small.grid.N))
    for t in (0.0, 0.137, 0.5, 0.9):
        a = apply_A(t, s, ctx)
        b = apply_A(t + orbit_small.period, s, ctx)
        assert np.max(np.abs(a - b)) <= 1e-10 * max(1.0, np.max(np.abs(a)))


def test_translation_generator_solves_linear_system(orbit_small):
    g = orbit_small.grid
    ctx = orbit_small.linear_context()
    M = orbit_small.M
    gen = np.array([orbit_small.translation_generator(m) for m in range(M)])
    # spectral time derivative over the stored period
    k = np.fft.fftfreq(M, d=1.0 / M)
    k[M // 2] = 0.0
    dgen = np.fft.ifft(np.fft.fft(gen, axis=0) * (2j * np.pi * k / orbit_small.period)[:, None, None], axis=0).real
    for m in (0, 13, 32, 50):
        lhs = apply_A(orbit_small.times[m], gen[m], ctx)
        scale = EnergyNorm(orbit_small.wall).norm(gen[m])
        assert EnergyNorm(orbit_small.wall).norm(lhs - dgen[m]) <= 1e-4 * scale


def test_perturbed_generator_block_is_order_epsilon(orbit_small):
    half = continue_orbit(orbit_small, 0.5 * orbit_small.epsilon)
    N = orbit_small.grid.N
    A0 = assemble_matrix("A0", orbit_small.wall, nu=NU).entries
    norms = []
    for orb in (half, orbit_small):
        A = assemble_matrix("A", orb.linear_context(), t=0.25).entries
        D = A - A0
        assert np.max(np.abs(D[:N, :])) == 0.0 and np.max(np.abs(D[N:, N:])) == 0.0
        norms.append(np.linalg.norm(D[N:, :N], 2))
    C = norms[1] / orbit_small.epsilon
    assert norms[0] == pytest.approx(C * half.epsilon, rel=0.1)


def test_state_roundtrip(grid_small, rng):
    a = rng.standard_normal((2, grid_small.N))
    s = State.from_array(grid_small, a)
    assert np.array_equal(s.array(), a)
    with pytest.raises(ValueError):
        State(grid_small, np.zeros(3), np.zeros(3))
