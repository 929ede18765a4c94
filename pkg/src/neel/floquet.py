"""Monodromy of the linearization around the periodic wall and its leading multipliers.

The monodromy ``M`` maps a perturbation state at ``t = 0`` to its value at
``t = T`` under the linear stepper.  Leading multipliers come from a
Krylov-Schur Arnoldi iteration on ``M`` acting matrix-free.  Vectors live in
coordinates scaled to ``H^1 x L^2`` so that residuals and alignments are
measured in the energy space.

For ``nu > 0`` most of the spectrum of ``M`` sits on the circle
``|mu| = exp(-nu T / 2)``; those multipliers are not separated and Ritz
values there converge slowly.  The result keeps a per-multiplier
convergence flag rather than pretending otherwise.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .dynamics import LinearStepper, propagate
from .errors import ArnoldiStagnation, DenseCapExceeded
from .linear_ops import LinearContext
from .periodic_orbit import PeriodicWall, _Scaling

log = logging.getLogger(__name__)

UNIT_TOL = 1e-5
SIMPLE_TOL = 1e-3


def _context(orbit: PeriodicWall) -> LinearContext:
    if orbit.epsilon == 0.0:
        return LinearContext.from_wall(orbit.wall, orbit.nu)
    return orbit.linear_context()


def monodromy_apply(orbit: PeriodicWall, s, dt: float | None = None, ctx: LinearContext | None = None):
    """``U(T, 0) s`` for a state (or batch of states) of shape ``(..., 2, N)``."""
    ctx = ctx or _context(orbit)
    stepper = LinearStepper(ctx, dt or orbit.dt)
    return propagate(stepper, s, 0.0, orbit.period)


def dense_monodromy(orbit: PeriodicWall, dt: float | None = None, cap: int = 512, batch: int | None = None,
                    scaled: bool = False) -> np.ndarray:
    """Assemble ``M`` column by column; ``(2N, 2N)`` in grid-sample coordinates.

    With ``scaled=True`` the matrix acts on ``H^1 x L^2``-scaled coordinates.
    """
    g = orbit.grid
    N = g.N
    if N > cap:
        raise DenseCapExceeded(N, cap)
    ctx = _context(orbit)
    stepper = LinearStepper(ctx, dt or orbit.dt)
    # moderate batches keep the FFT work arrays in cache
    batch = batch or min(2 * N, 128)
    cols = []
    for start in range(0, 2 * N, batch):
        stop = min(2 * N, start + batch)
        e = np.zeros((stop - start, 2 * N))
        e[np.arange(stop - start), np.arange(start, stop)] = 1.0
        out = propagate(stepper, e.reshape(-1, 2, N), 0.0, orbit.period)
        cols.append(out.reshape(stop - start, 2 * N))
    M = np.concatenate(cols, axis=0).T
    if scaled:
        D = _scaling_matrix(orbit)
        M = D @ M @ np.linalg.inv(D)
    return M


def _scaling_matrix(orbit: PeriodicWall) -> np.ndarray:
    sc = _Scaling(orbit.grid)
    N = orbit.grid.N
    eye = np.eye(2 * N)
    return np.stack([sc.to(col.reshape(2, N)) for col in eye], axis=1)


# -- Krylov-Schur ---------------------------------------------------------------

@dataclass
class KrylovSchurResult:
    values: np.ndarray
    vectors: np.ndarray            # columns, unit Euclidean norm
    residuals: np.ndarray          # |A x - theta x| for unit x
    converged: np.ndarray
    matvecs: int
    restarts: int


def _expand(matvec, V, H, start: int, m: int) -> int:
    """Arnoldi with two passes of classical Gram-Schmidt from column ``start`` to ``m``."""
    count = 0
    for j in range(start, m):
        w = matvec(V[:, j])
        count += 1
        h = V[:, : j + 1].T @ w
        w = w - V[:, : j + 1] @ h
        h2 = V[:, : j + 1].T @ w
        w = w - V[:, : j + 1] @ h2
        h = h + h2
        beta = np.linalg.norm(w)
        H[: j + 1, j] = h
        H[j + 1, j] = beta
        if beta <= 1e-14 * max(1.0, np.linalg.norm(h)):
            # invariant subspace: continue with a fresh orthogonal direction
            rng = np.random.default_rng(j)
            w = rng.standard_normal(V.shape[0])
            for _ in range(2):
                w -= V[:, : j + 1] @ (V[:, : j + 1].T @ w)
            w /= np.linalg.norm(w)
            H[j + 1, j] = 0.0
        else:
            w /= beta
        V[:, j + 1] = w
    return count


def _ritz(Hm, beta_row):
    vals, Y = np.linalg.eig(Hm)
    res = np.abs(beta_row @ Y)
    return vals, Y, res


def krylov_schur(matvec, n: int, k: int, m: int | None = None, tol: float = 1e-6,
                 max_restarts: int = 10, v0=None, seed: int = 0, stop=None) -> KrylovSchurResult:
    """Largest-modulus eigenpairs of a real operator by Krylov-Schur restarting.

    ``stop(values, residuals)`` may end the iteration early, e.g. once the
    eigenvalues of interest have converged.
    """
    m = m or 3 * k
    if not k < m < n:
        m = min(max(m, k + 2), n - 1)
    V = np.zeros((n, m + 1))
    H = np.zeros((m + 1, m))
    v = np.asarray(v0, dtype=float).copy() if v0 is not None else np.random.default_rng(seed).standard_normal(n)
    V[:, 0] = v / np.linalg.norm(v)
    matvecs = _expand(matvec, V, H, 0, m)
    restarts = 0
    while True:
        Hm = H[:m, :m]
        beta = H[m, :m]
        vals, Y, res = _ritz(Hm, beta)
        order = np.argsort(-np.abs(vals), kind="stable")
        vals, Y, res = vals[order], Y[:, order], res[order]
        conv = res <= tol * np.maximum(np.abs(vals), 1e-300)
        done = bool(np.all(conv[:k])) or (stop is not None and stop(vals[:k], res[:k]))
        if done or restarts >= max_restarts:
            break
        # keep the k wanted Ritz values, without splitting a conjugate pair
        thresh = np.abs(vals[k - 1]) * (1.0 - 1e-12)
        T, Z, p = sla.schur(Hm, output="real", sort=lambda re, im: np.hypot(re, im) >= thresh)
        if p >= m:
            break
        V[:, :p] = V[:, :m] @ Z[:, :p]
        V[:, p] = V[:, m]
        Hn = np.zeros((m + 1, m))
        Hn[:p, :p] = T[:p, :p]
        Hn[p, :p] = H[m, m - 1] * Z[m - 1, :p]
        H = Hn
        V[:, p + 1:] = 0.0
        matvecs += _expand(matvec, V, H, p, m)
        restarts += 1
    X = V[:, :m] @ Y[:, :k]
    X /= np.linalg.norm(X, axis=0)
    return KrylovSchurResult(vals[:k], X, res[:k] / np.maximum(np.linalg.norm(Y[:, :k], axis=0), 1e-300),
                             conv[:k], matvecs, restarts)


# -- Floquet multipliers ------------------------------------------------------------

@dataclass
class FloquetResult:
    epsilon: float
    multipliers: np.ndarray
    residuals: np.ndarray
    converged: np.ndarray
    unit_multiplier_error: float
    second_modulus: float
    stable: bool
    n_near_unit: int
    unit_alignment: float
    unit_vector: np.ndarray = field(repr=False)
    matvecs: int = 0
    restarts: int = 0
    simple: bool = True

    def verdict_text(self) -> str:
        lines = [
            f"stable: {'true' if self.stable else 'false'}",
            f"epsilon: {self.epsilon!r}",
            f"unit_multiplier_error: {self.unit_multiplier_error!r}",
            f"second_modulus: {self.second_modulus!r}",
            f"multipliers_within_{UNIT_TOL:g}_of_1: {self.n_near_unit}",
            f"unit_simple: {'true' if self.simple else 'false'}",
            f"unit_eigenvector_alignment: {self.unit_alignment!r}",
            f"converged_multipliers: {int(np.sum(self.converged))}/{self.converged.size}",
            f"matvecs: {self.matvecs}",
        ]
        return "\n".join(lines) + "\n"


def _classify(epsilon, vals, vecs, res, conv, theta_bar_scaled, matvecs, restarts) -> FloquetResult:
    vals = np.asarray(vals)
    near = np.abs(vals - 1.0)
    i1 = int(np.argmin(near))
    n_near = int(np.sum(near <= UNIT_TOL))
    others = np.delete(np.arange(vals.size), i1)
    second = float(np.max(np.abs(vals[others]))) if others.size else 0.0
    simple = bool(np.all(near[others] > SIMPLE_TOL)) if others.size else True
    phi = vecs[:, i1].real
    tb = theta_bar_scaled / np.linalg.norm(theta_bar_scaled)
    align = float(abs(phi @ tb) / np.linalg.norm(phi))
    err = float(near[i1])
    stable = bool(second < 1.0 and err <= UNIT_TOL and n_near == 1)
    return FloquetResult(float(epsilon), vals, np.asarray(res), np.asarray(conv), err, second, stable,
                         n_near, align, phi, matvecs, restarts, simple)


def floquet_multipliers(orbit: PeriodicWall, k: int = 12, m: int | None = None, tol: float = 1e-6,
                        max_restarts: int = 3, seed: int = 0, dt: float | None = None) -> FloquetResult:
    """Leading ``k`` multipliers of the monodromy by matrix-free Krylov-Schur.

    The iteration stops once the multiplier nearest 1 has converged and the
    Ritz values no longer move the deflated spectral radius, or after
    ``max_restarts`` restarts.  Raises ``ArnoldiStagnation`` if even the
    unit multiplier fails to converge.
    """
    if not 1 <= k <= 40:
        raise ValueError("k must lie in 1..40")
    g = orbit.grid
    sc = _Scaling(g)
    ctx = _context(orbit)
    stepper = LinearStepper(ctx, dt or orbit.dt)
    n = 2 * g.N

    def matvec(y):
        return sc.to(propagate(stepper, sc.back(y), 0.0, orbit.period))

    history = []

    def stop(vals, res):
        i1 = int(np.argmin(np.abs(vals - 1.0)))
        unit_ok = res[i1] <= tol * abs(vals[i1])
        others = np.delete(np.abs(vals), i1)
        history.append(float(np.max(others)) if others.size else 0.0)
        steady = len(history) >= 2 and abs(history[-1] - history[-2]) <= 2e-2
        return unit_ok and steady

    ks = krylov_schur(matvec, n, k, m, tol, max_restarts, seed=seed, stop=stop)
    i1 = int(np.argmin(np.abs(ks.values - 1.0)))
    if not ks.converged[i1] and ks.residuals[i1] > 1e2 * tol:
        raise ArnoldiStagnation("unit multiplier did not converge", residuals=ks.residuals.tolist(),
                                values=[complex(v) for v in ks.values], matvecs=ks.matvecs)
    theta_bar = sc.to(orbit.translation_generator(0))
    return _classify(orbit.epsilon, ks.values, ks.vectors, ks.residuals, ks.converged, theta_bar,
                     ks.matvecs, ks.restarts)


def dense_multipliers(orbit: PeriodicWall, dt: float | None = None, cap: int = 512) -> np.ndarray:
    """Full monodromy spectrum from the assembled matrix, sorted by modulus."""
    M = dense_monodromy(orbit, dt=dt, cap=cap)
    ev = np.linalg.eigvals(M)
    return ev[np.argsort(-np.abs(ev), kind="stable")]


def perturbation_norm_sweep(wall, forcing, period: float, epsilons, nu: float = 0.5, dt: float | None = None,
                            snapshots: int = 256, tol: float = 1e-10, cap: int = 512) -> list[tuple[float, float]]:
    """``(eps, |M_eps - M_0|)`` with the operator 2-norm on ``H^1 x L^2``, by dense assembly.

    Orbits are continued in epsilon from the smallest amplitude.
    """
    from .periodic_orbit import static_orbit, sweep

    dt = dt or period / 2048
    base = static_orbit(wall, period, nu, forcing, dt, snapshots)
    M0 = dense_monodromy(base, cap=cap, scaled=True)
    out = []
    orbits = sweep(wall, [e for e in epsilons if e != 0.0], period=period, forcing=forcing, nu=nu, dt=dt,
                   snapshots=snapshots, tol=tol)
    by_eps = {o.epsilon: o for o in orbits}
    for e in epsilons:
        if e == 0.0:
            out.append((0.0, 0.0))
            continue
        Me = dense_monodromy(by_eps[float(e)], cap=cap, scaled=True)
        out.append((float(e), float(np.linalg.norm(Me - M0, 2))))
    return out
