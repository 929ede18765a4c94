"""Linearized operators around the static and the oscillating wall.

    L u   = -u'' + s (1 + |D|)(s u) - c u,      s = sin theta, c = cos theta (1+|D|) cos theta
    A(t)  = [[0, I], [-L_bar(t) - eps H(t) s_bar(t), -nu I]]

``A0`` is ``A`` at the static wall with ``eps = 0``.  The damping block is
``-nu I`` so that the first-order system matches the damped dynamics.

States are stored as arrays of shape ``(2, N)`` (or ``(..., 2, N)`` for
batches): row 0 is the perturbation ``u``, row 1 its velocity ``v``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as sla

from .errors import DenseCapExceeded, EigensolverBreakdown
from .grid import Grid
from .static_wall import StaticWall

KINDS = ("L0", "Lbar", "A0", "A")


@dataclass
class State:
    grid: Grid
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if self.u.shape != (self.grid.N,) or self.v.shape != (self.grid.N,):
            raise ValueError("u and v must both have N samples")

    def array(self) -> np.ndarray:
        return np.stack([self.u, self.v])

    @classmethod
    def from_array(cls, grid: Grid, a) -> "State":
        a = np.asarray(a, dtype=float).reshape(2, grid.N)
        return cls(grid, a[0].copy(), a[1].copy())


def apply_L(grid: Grid, s, cc, u):
    """``-u'' + s (1+|D|)(s u) - cc u`` with antiperiodic nonlocal action."""
    return -grid.second_derivative(u) + s * grid.one_plus_half_laplacian_anti(s * u) - cc * u


def apply_L0(wall: StaticWall, u):
    s, cc = wall.coefficients()
    return apply_L(wall.grid, s, cc, u)


def _lagrange4(frac: float) -> np.ndarray:
    # weights for nodes at -1, 0, 1, 2 evaluated at frac in [0, 1)
    f = frac
    return np.array([
        -f * (f - 1.0) * (f - 2.0) / 6.0,
        (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0,
        -(f + 1.0) * f * (f - 2.0) / 2.0,
        (f + 1.0) * f * (f - 1.0) / 6.0,
    ])


class LinearContext:
    """Coefficients of the linearized system, frozen or tabulated over a period.

    ``s_table`` and ``c_table`` have shape ``(M, N)`` with row ``m`` sampled at
    ``t = m T / M``; values in between use periodic cubic Lagrange interpolation.
    A single row means time-independent coefficients.
    """

    def __init__(self, grid: Grid, s_table, c_table, nu: float, epsilon: float = 0.0,
                 forcing: Callable[[float], float] | None = None, period: float = 1.0,
                 wall: StaticWall | None = None):
        self.grid = grid
        self.s_table = np.atleast_2d(np.asarray(s_table, dtype=float))
        self.c_table = np.atleast_2d(np.asarray(c_table, dtype=float))
        self.nu = float(nu)
        self.epsilon = float(epsilon)
        self.forcing = forcing
        self.period = float(period)
        self.wall = wall

    @classmethod
    def from_wall(cls, wall: StaticWall, nu: float) -> "LinearContext":
        s, cc = wall.coefficients()
        return cls(wall.grid, s, cc, nu, 0.0, None, 1.0, wall)

    @property
    def frozen(self) -> bool:
        return self.s_table.shape[0] == 1

    def H(self, t: float) -> float:
        if self.forcing is None or self.epsilon == 0.0:
            return 0.0
        return float(self.forcing(t))

    def coefficients(self, t: float):
        if self.frozen:
            return self.s_table[0], self.c_table[0]
        M = self.s_table.shape[0]
        pos = (t / self.period) * M
        m = int(np.floor(pos))
        frac = pos - m
        if frac < 1e-13:
            i = m % M
            return self.s_table[i], self.c_table[i]
        idx = np.arange(m - 1, m + 3) % M
        wts = _lagrange4(frac)
        return wts @ self.s_table[idx], wts @ self.c_table[idx]

    def potential(self, t: float):
        """``(s, cc + eps H s)``: the zero-order coefficient is ``-(cc) + eps H s`` folded."""
        s, cc = self.coefficients(t)
        return s, cc, self.epsilon * self.H(t)

    def apply_Lbar(self, t: float, u):
        s, cc = self.coefficients(t)
        return apply_L(self.grid, s, cc, u)


def apply_A(t: float, state, ctx: LinearContext):
    """Action of ``A(t)`` on a state array of shape ``(..., 2, N)``."""
    state = np.asarray(state, dtype=float)
    u = state[..., 0, :]
    v = state[..., 1, :]
    s, cc, eH = ctx.potential(t)
    dv = -apply_L(ctx.grid, s, cc, u) - eH * s * u - ctx.nu * v
    return np.stack([v.copy(), dv], axis=-2)


class EnergyNorm:
    """Energy inner product ``<u, L0 u'> + <v, v'>`` built on a static wall."""

    def __init__(self, wall: StaticWall):
        self.wall = wall

    def inner(self, a, b):
        g = self.wall.grid
        return g.inner(a[..., 0, :], apply_L0(self.wall, b[..., 0, :])) + g.inner(a[..., 1, :], b[..., 1, :])

    def norm_sq(self, a):
        return self.inner(a, a)

    def norm(self, a):
        """Z-norm with the translation component added back, so it is a norm on all states."""
        e = self.wall.translation_unit
        t = self.wall.grid.inner(np.asarray(a)[..., 0, :], e)
        return np.sqrt(np.maximum(self.norm_sq(a), 0.0) + t * t)


@dataclass
class OperatorMatrix:
    grid: Grid
    entries: np.ndarray
    kind: str
    t: float = 0.0

    def is_symmetric(self, tol: float = 1e-9) -> bool:
        a = self.entries
        return bool(np.max(np.abs(a - a.T)) <= tol * max(1.0, np.max(np.abs(a))))


def _columns(N: int, apply, batch: int = 256) -> np.ndarray:
    cols = []
    for start in range(0, N, batch):
        stop = min(N, start + batch)
        e = np.zeros((stop - start, N))
        e[np.arange(stop - start), np.arange(start, stop)] = 1.0
        cols.append(apply(e))
    return np.concatenate(cols, axis=0).T


def assemble_matrix(kind: str, ctx: LinearContext | StaticWall, t: float = 0.0,
                    nu: float | None = None, cap: int = 2048) -> OperatorMatrix:
    """Dense matrix of ``L0``, ``Lbar(t)``, ``A0`` or ``A(t)`` in grid-sample coordinates."""
    if kind not in KINDS:
        raise ValueError(f"unknown operator kind {kind!r}; expected one of {KINDS}")
    if isinstance(ctx, StaticWall):
        if kind in ("A0", "A") and nu is None:
            raise ValueError("nu is required to assemble A0 from a wall")
        ctx = LinearContext.from_wall(ctx, 0.0 if nu is None else nu)
    grid = ctx.grid
    N = grid.N
    if N > cap:
        raise DenseCapExceeded(N, cap)
    if kind in ("L0", "A0"):
        if ctx.wall is None:
            raise ValueError(f"{kind} needs the static wall")
        s, cc = ctx.wall.coefficients()
        Lm = _columns(N, lambda e: apply_L(grid, s, cc, e))
        zero_order = np.zeros(N)
    else:
        s, cc, eH = ctx.potential(t)
        Lm = _columns(N, lambda e: apply_L(grid, s, cc, e))
        zero_order = eH * s
    if kind in ("L0", "Lbar"):
        return OperatorMatrix(grid, Lm, kind, t)
    A = np.zeros((2 * N, 2 * N))
    A[:N, N:] = np.eye(N)
    A[N:, :N] = -Lm - np.diag(zero_order)
    A[N:, N:] = -ctx.nu * np.eye(N)
    return OperatorMatrix(grid, A, kind, t)


@dataclass
class Eigenpairs:
    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray

    def __iter__(self):
        return iter(zip(self.values, self.vectors))

    def __len__(self):
        return len(self.values)


def smallest_eigenpairs(m: OperatorMatrix, k: int = 10) -> Eigenpairs:
    """The ``k`` smallest eigenpairs of an assembled L-type matrix.

    Eigenvectors are rows of ``vectors``, normalized in the grid L2 norm.
    """
    if m.kind not in ("L0", "Lbar"):
        raise ValueError("smallest_eigenpairs needs a self-adjoint L-type matrix")
    if not 1 <= k <= 20:
        raise ValueError("k must lie in 1..20")
    a = 0.5 * (m.entries + m.entries.T)
    try:
        vals, vecs = sla.eigh(a, subset_by_index=[0, k - 1])
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigensolverBreakdown(f"dense eigh failed: {exc}", size=a.shape[0]) from exc
    vecs = vecs.T / np.sqrt(m.grid.dx)
    # deterministic sign: largest-magnitude entry positive
    idx = np.argmax(np.abs(vecs), axis=1)
    vecs *= np.sign(vecs[np.arange(k), idx])[:, None]
    res = np.array([m.grid.norm(m.entries @ phi - lam * phi) for lam, phi in zip(vals, vecs)])
    return Eigenpairs(vals, vecs, res)


def quadratic_roots(lam_L, nu: float) -> np.ndarray:
    """Both roots of ``lambda^2 + nu lambda + lam_L = 0`` for each ``lam_L``."""
    lam_L = np.asarray(lam_L, dtype=complex)
    disc = np.sqrt(nu * nu - 4.0 * lam_L)
    return np.concatenate([(-nu + disc) / 2.0, (-nu - disc) / 2.0])


def match_spectra(a, b) -> np.ndarray:
    """Pairwise distances after optimal one-to-one matching of two point sets."""
    from scipy.optimize import linear_sum_assignment

    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return cost[r, c]


def spectral_gap(a0_eigenvalues, nu: float, tol: float = 1e-6) -> float:
    """``min(-Re lambda)`` over the A0 spectrum with the pair at ``{0, -nu}`` set aside.

    The pair comes from the translation mode: one eigenvalue at 0 and its
    damped partner at ``-nu``.  Only the closest eigenvalue to each is removed.
    """
    ev = np.asarray(a0_eigenvalues, dtype=complex)
    keep = np.ones(ev.size, dtype=bool)
    for target in (0.0, -nu):
        i = np.argmin(np.where(keep, np.abs(ev - target), np.inf))
        if abs(ev[i] - target) <= max(tol, 1e-3):
            keep[i] = False
    return float(np.min(-ev[keep].real))
