"""Time integration of the forced wall dynamics and of linearized systems.

    theta_tt + nu theta_t + grad E(theta) = eps H(t) cos theta,   theta = theta_ref + w
    u_tt + nu u_t + L_bar(t) u + eps H(t) sin(theta_bar) u = eps H(t) g(x)   (g optional)

Both use the same second-order IMEX scheme.  Writing ``a = 1 + xi^2`` for the
implicit symbol, the stiff part ``(w' = v, v' = -a w)`` is trapezoidal and the
remainder ``n(w, v, t)`` explicit:

    predictor (IMEX Euler to t + dt/2)
        v* = (v - h a w + h n) / (1 + a h^2),   w* = w + h v*,   h = dt/2
    corrector (trapezoid + midpoint)
        v1 = (v (1 - a dt^2/4) - a dt w + dt n*) / (1 + a dt^2/4)
        w1 = w + dt/2 (v + v1)

Each step maps physical samples to physical samples, so chaining evolutions
reproduces a single evolution bit for bit.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.fft as sfft

from .errors import BlowUp, ForcingError
from .grid import Grid
from .linear_ops import LinearContext, apply_L0
from .static_wall import StaticWall

log = logging.getLogger(__name__)

BLOWUP_H1 = 1e3
FORCING_KINDS = ("cosine", "odd_harmonics", "custom_samples")


class Forcing:
    """T-periodic applied field ``H(t)`` with ``H(t + T/2) = -H(t)``.

    ``odd_harmonics`` takes ``harmonics`` as ``(n, a_n, b_n)`` triples (``n`` odd)
    meaning ``a_n cos(n w t) + b_n sin(n w t)``.  ``custom_samples`` takes one
    period of uniformly spaced samples and evaluates their trigonometric
    interpolant.
    """

    def __init__(self, kind: str = "cosine", amplitude: float = 1.0, period: float = 1.0,
                 harmonics: Sequence[tuple] | None = None, samples=None, check_points: int = 1000):
        if kind not in FORCING_KINDS:
            raise ForcingError(f"unknown forcing kind {kind!r}", kind=kind)
        if not period > 0:
            raise ForcingError("period must be positive", period=period)
        self.kind = kind
        self.amplitude = float(amplitude)
        self.period = float(period)
        self.omega = 2.0 * np.pi / self.period
        if kind == "cosine":
            self._terms = [(1, 1.0, 0.0)]
        elif kind == "odd_harmonics":
            terms = list(harmonics) if harmonics is not None else [(1, 1.0, 0.0), (3, 1.0 / 3.0, 0.0)]
            for n, _, _ in terms:
                if int(n) != n or n < 1 or int(n) % 2 == 0:
                    raise ForcingError(f"harmonic index {n} is not a positive odd integer", index=n)
            self._terms = [(int(n), float(a), float(b)) for n, a, b in terms]
        else:
            if samples is None:
                raise ForcingError("custom_samples forcing needs samples")
            samples = np.asarray(samples, dtype=float)
            if samples.ndim != 1 or samples.size < 2:
                raise ForcingError("samples must be a 1-D array with at least two entries")
            self.samples = samples
            self._coef = sfft.rfft(samples) / samples.size
            self._terms = None
        self.antiperiodicity_defect = self._check(check_points)
        if self.antiperiodicity_defect > 1e-10 * max(1.0, self.max_abs()):
            raise ForcingError("forcing is not T/2-antiperiodic",
                               defect=self.antiperiodicity_defect)

    def _eval(self, t):
        t = np.asarray(t, dtype=float)
        if self._terms is not None:
            out = np.zeros_like(t)
            for n, a, b in self._terms:
                out = out + a * np.cos(n * self.omega * t) + b * np.sin(n * self.omega * t)
            return self.amplitude * out
        n = self.samples.size
        k = np.arange(self._coef.size)
        wk = np.where((k == 0) | ((n % 2 == 0) & (k == n // 2)), 1.0, 2.0)
        ph = np.exp(1j * np.multiply.outer(t, k) * self.omega)
        return self.amplitude * np.real(ph @ (wk * self._coef))

    def __call__(self, t):
        val = self._eval(t)
        return float(val) if np.ndim(val) == 0 else val

    def max_abs(self) -> float:
        ts = np.linspace(0.0, self.period, 1001)
        return float(np.max(np.abs(self._eval(ts))))

    def _check(self, n: int) -> float:
        ts = np.linspace(0.0, self.period, n, endpoint=False)
        return float(np.max(np.abs(self._eval(ts) + self._eval(ts + 0.5 * self.period))))

    def harmonics(self):
        """``(n, a_n, b_n)`` terms including the amplitude."""
        if self._terms is not None:
            return [(n, self.amplitude * a, self.amplitude * b) for n, a, b in self._terms]
        n = self.samples.size
        out = []
        for k in range(1, self._coef.size):
            c = self._coef[k] * (1.0 if (n % 2 == 0 and k == n // 2) else 2.0)
            if abs(c) > 0:
                out.append((k, self.amplitude * c.real, -self.amplitude * c.imag))
        return out


class _Stepper:
    """Shared IMEX arithmetic on rfft coefficients."""

    def __init__(self, grid: Grid, dt: float):
        self.grid = grid
        self.dt = float(dt)
        self.a = 1.0 - grid._d2
        h = 0.5 * self.dt
        self._h = h
        self._pred = 1.0 / (1.0 + self.a * h * h)
        q = 0.25 * self.a * self.dt * self.dt
        self._c1 = (1.0 - q) / (1.0 + q)
        self._c2 = self.a * self.dt / (1.0 + q)
        self._c3 = self.dt / (1.0 + q)
        self._h1w = grid._pw * (1.0 - grid._d2)

    def _advance(self, w, v, n_of, t):
        """One step given ``n_of(w_phys, w_hat, v_hat, t) -> n_hat``."""
        N = self.grid.N
        wh = sfft.rfft(w, axis=-1)
        vh = sfft.rfft(v, axis=-1)
        h = self._h
        nh = n_of(w, wh, vh, t)
        vs = (vh - h * self.a * wh + h * nh) * self._pred
        ws = wh + h * vs
        w_star = sfft.irfft(ws, n=N, axis=-1)
        ns = n_of(w_star, ws, vs, t + h)
        v1 = self._c1 * vh - self._c2 * wh + self._c3 * ns
        w1 = wh + h * (vh + v1)
        return w1, v1

    def h1(self, wh):
        return np.sqrt(np.sum(self._h1w * np.abs(wh) ** 2, axis=-1))


class NonlinearStepper(_Stepper):
    def __init__(self, grid: Grid, dt: float, epsilon: float = 0.0, nu: float = 0.5,
                 forcing: Callable[[float], float] | None = None):
        super().__init__(grid, dt)
        self.epsilon = float(epsilon)
        self.nu = float(nu)
        self.forcing = forcing
        self._ref2h = sfft.rfft(grid.d2theta_ref)
        self._theta_ref = grid.theta_ref

    def H(self, t: float) -> float:
        if self.forcing is None or self.epsilon == 0.0:
            return 0.0
        return float(self.forcing(t))

    def _n(self, w, wh, vh, t):
        theta = self._theta_ref + w
        c = np.cos(theta)
        rest = np.sin(theta) * self.grid.one_plus_half_laplacian_anti(c)
        eH = self.epsilon * self.H(t)
        if eH != 0.0:
            rest = rest + eH * c
        return sfft.rfft(rest, axis=-1) + wh + self._ref2h - self.nu * vh

    def step(self, state, t: float) -> np.ndarray:
        state = np.asarray(state, dtype=float)
        w1, v1 = self._advance(state[..., 0, :], state[..., 1, :], self._n, t)
        norm = np.max(self.h1(w1))
        if not np.isfinite(norm) or norm > BLOWUP_H1:
            raise BlowUp(norm, t + self.dt)
        N = self.grid.N
        return np.stack([sfft.irfft(w1, n=N, axis=-1), sfft.irfft(v1, n=N, axis=-1)], axis=-2)


class LinearStepper(_Stepper):
    def __init__(self, ctx: LinearContext, dt: float, source=None):
        super().__init__(ctx.grid, dt)
        self.ctx = ctx
        self.source = None if source is None else np.asarray(source, dtype=float)

    def _n(self, u, uh, vh, t):
        s, cc, eH = self.ctx.potential(t)
        rest = -s * self.grid.one_plus_half_laplacian_anti(s * u) + cc * u
        if eH != 0.0:
            rest = rest - eH * s * u
        out = sfft.rfft(rest, axis=-1) + uh - self.ctx.nu * vh
        if self.source is not None and self.ctx.epsilon != 0.0 and self.ctx.forcing is not None:
            out = out + (self.ctx.epsilon * float(self.ctx.forcing(t))) * sfft.rfft(self.source)
        return out

    def step(self, state, t: float) -> np.ndarray:
        state = np.asarray(state, dtype=float)
        u1, v1 = self._advance(state[..., 0, :], state[..., 1, :], self._n, t)
        N = self.grid.N
        return np.stack([sfft.irfft(u1, n=N, axis=-1), sfft.irfft(v1, n=N, axis=-1)], axis=-2)


def step_nonlinear(grid: Grid, state, t: float, dt: float, epsilon: float = 0.0, nu: float = 0.5,
                   forcing=None) -> np.ndarray:
    """One IMEX step of the forced dynamics for ``state = [w, w_t]``."""
    return NonlinearStepper(grid, dt, epsilon, nu, forcing).step(state, t)


def step_linear(state, t: float, dt: float, ctx: LinearContext, source=None) -> np.ndarray:
    """One IMEX step of the linearized system around the coefficients in ``ctx``."""
    return LinearStepper(ctx, dt, source).step(state, t)


def hypocoercivity_functionals(state, wall: StaticWall, nu: float):
    """``(f, g)`` with ``g = nu (|v|^2 + <u, L0 u>)`` and
    ``f = |v|^2 + <u, L0 u> + nu^2/2 |u|^2 + nu <u, v>``; along free solutions ``f' = -g``."""
    state = np.asarray(state, dtype=float)
    u = state[..., 0, :]
    v = state[..., 1, :]
    grid = wall.grid
    vv = grid.inner(v, v)
    uLu = grid.inner(u, apply_L0(wall, u))
    g = nu * (vv + uLu)
    f = vv + uLu + 0.5 * nu * nu * grid.inner(u, u) + nu * grid.inner(u, v)
    return f, g


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    dt: float
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("trajectory times must increase strictly")

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def _n_steps(t0: float, t1: float, dt: float) -> int:
    n = int(round((t1 - t0) / dt))
    if n < 0 or abs(n * dt - (t1 - t0)) > 1e-9 * max(1.0, abs(t1 - t0)):
        raise ValueError(f"interval [{t0}, {t1}] is not a whole number of steps dt={dt}")
    return n


def evolve(stepper, s0, t0: float, t1: float, record_every: int = 1, wall: StaticWall | None = None,
           nu: float | None = None, subtract=None, callback=None) -> Trajectory:
    """Compose steps from ``t0`` to ``t1`` and record every ``record_every`` steps.

    Time levels are ``t0 + j dt``.  With ``wall`` given, the hypocoercivity
    functionals of the recorded states (minus ``subtract``, projected off the
    translation mode) are stored under ``diagnostics['f']`` and ``['g']``.
    """
    dt = stepper.dt
    n = _n_steps(t0, t1, dt)
    state = np.array(s0, dtype=float)
    times = [t0]
    states = [state.copy()]
    for j in range(n):
        t = t0 + j * dt
        state = stepper.step(state, t)
        if callback is not None:
            callback(t + dt, state)
        if (j + 1) % record_every == 0 or j + 1 == n:
            times.append(t0 + (j + 1) * dt)
            states.append(state.copy())
    traj = Trajectory(np.array(times), np.array(states), dt)
    if wall is not None:
        nu_ = stepper.nu if nu is None else nu
        d = traj.states if subtract is None else traj.states - subtract
        d = orthogonal_part(wall, d)
        f, g = hypocoercivity_functionals(d, wall, nu_)
        traj.diagnostics["f"] = np.atleast_1d(f)
        traj.diagnostics["g"] = np.atleast_1d(g)
    return traj


def orthogonal_part(wall: StaticWall, state):
    """Remove the translation component from both rows of a state."""
    state = np.array(state, dtype=float)
    state[..., 0, :] = wall.project_out_translation(state[..., 0, :])
    state[..., 1, :] = wall.project_out_translation(state[..., 1, :])
    return state


def propagate(stepper, s0, t0: float, t1: float) -> np.ndarray:
    """Final state only, without recording."""
    n = _n_steps(t0, t1, stepper.dt)
    state = np.array(s0, dtype=float)
    for j in range(n):
        state = stepper.step(state, t0 + j * stepper.dt)
    return state


@dataclass
class ConvergenceReport:
    error_estimate: float
    dt: float
    halved: bool


def observed_order(make_stepper, s0, t0: float, t1: float, dt: float, norm=None) -> tuple[float, float, float]:
    """Richardson self-convergence from runs at ``dt``, ``dt/2``, ``dt/4``.

    Returns ``(order, |y_dt - y_dt/2|, |y_dt/2 - y_dt/4|)``.
    """
    norm = norm or (lambda a: float(np.sqrt(np.sum(np.asarray(a) ** 2))))
    ys = [propagate(make_stepper(dt / 2**k), s0, t0, t1) for k in range(3)]
    e1 = norm(ys[0] - ys[1])
    e2 = norm(ys[1] - ys[2])
    return float(np.log2(e1 / e2)), e1, e2


def evolve_checked(make_stepper, s0, t0: float, t1: float, dt: float, tol: float, **kw):
    """Evolve at ``dt`` unless a Richardson estimate exceeds ``tol``, then halve once.

    Returns ``(trajectory, ConvergenceReport)``; the report records the final step.
    """
    fine = propagate(make_stepper(dt / 2), s0, t0, t1)
    coarse = propagate(make_stepper(dt), s0, t0, t1)
    err = float(np.sqrt(np.sum((coarse - fine) ** 2))) / 3.0
    use_dt, halved = dt, False
    if err > tol:
        use_dt, halved = dt / 2, True
        finer = propagate(make_stepper(dt / 4), s0, t0, t1)
        err = float(np.sqrt(np.sum((fine - finer) ** 2))) / 3.0
        log.info("self-convergence check failed at dt=%g; continuing with dt=%g", dt, use_dt)
    traj = evolve(make_stepper(use_dt), s0, t0, t1, **kw)
    return traj, ConvergenceReport(err, use_dt, halved)
