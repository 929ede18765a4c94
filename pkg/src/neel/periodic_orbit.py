"""The time-periodic oscillating wall and its translation/remainder split.

The orbit is the fixed point of the symmetry-reduced half-period map

    F(s) = S P_{T/2}(s) - s,       S(w, v)(x) = (-w(-x), -v(-x)),

where ``P_{T/2}`` integrates the forced dynamics over half a period.  Since
``H(t + T/2) = -H(t)`` the flow commutes with ``S`` up to that time shift, so a
zero of ``F`` is a T-periodic orbit with ``theta(x, t + T/2) = -theta(-x, t)``.
The translation direction is odd under ``S``; the reduced problem therefore has
no zero mode and needs no extra phase condition.  ``F`` is solved by Newton's
method with restarted GMRES on finite-difference Jacobian actions, in variables
scaled to ``H^1 x L^2``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
from scipy.sparse.linalg import LinearOperator, gmres

from .dynamics import Forcing, NonlinearStepper, propagate
from .errors import NonConvergence, NoRootInBracket, ValidationError
from .grid import Grid
from .linear_ops import EnergyNorm, LinearContext
from .static_wall import StaticWall

log = logging.getLogger(__name__)

EPS_MAX = 0.05


# -- leading-order translation ----------------------------------------------

@dataclass
class YSolution:
    times: np.ndarray
    Y: np.ndarray
    Ydot: np.ndarray
    residual: float
    normalization: str


def leading_order_Y(wall: StaticWall, forcing, nu: float, period: float | None = None,
                    samples: int = 256, normalization: str = "half_period") -> YSolution:
    """T-periodic solution of ``Y'' + nu Y' = 2 |theta0'|^-2 H`` by Fourier collocation in time.

    ``normalization='half_period'`` fixes ``Y(T/2) = 0``; ``'antisymmetric'``
    keeps the zero-mean solution, which satisfies ``Y(t + T/2) = -Y(t)`` for
    T/2-antiperiodic forcing.  ``residual`` is the max-norm defect of the ODE
    at the collocation points, with derivatives taken spectrally.
    """
    if normalization not in ("half_period", "antisymmetric"):
        raise ValueError(f"unknown normalization {normalization!r}")
    T = float(period if period is not None else getattr(forcing, "period", 1.0))
    if samples % 2:
        raise ValueError("samples must be even so that t = T/2 is a node")
    t = T * np.arange(samples) / samples
    h = np.asarray(forcing(t), dtype=float) if forcing is not None else np.zeros(samples)
    K = 2.0 / wall.norm_sq_dtheta0
    hh = np.fft.fft(h)
    k = np.fft.fftfreq(samples, d=1.0 / samples)
    iw = 2j * np.pi * k / T
    sym = iw * iw + nu * iw
    yh = np.zeros_like(hh)
    nz = k != 0
    yh[nz] = K * hh[nz] / sym[nz]
    # the Nyquist harmonic has no well-defined first derivative; smooth forcing has none
    yh[samples // 2] = 0.0
    Y = np.fft.ifft(yh).real
    Yd = np.fft.ifft(iw * yh).real
    Ydd = np.fft.ifft(iw * iw * yh).real
    res = float(np.max(np.abs(Ydd + nu * Yd - K * (h - h.mean()))))
    if normalization == "half_period":
        Y = Y - Y[samples // 2]
    return YSolution(t, Y, Yd, res, normalization)


def Y_closed_form(wall: StaticWall, forcing: Forcing, nu: float, t, normalization: str = "half_period"):
    """Sum over the forcing harmonics of ``K Re[c_n e^{i n w t} / ((i n w)^2 + nu i n w)]``."""
    t = np.asarray(t, dtype=float)
    K = 2.0 / wall.norm_sq_dtheta0
    w = forcing.omega

    def ev(tt):
        out = np.zeros_like(np.asarray(tt, dtype=float))
        for n, a, b in forcing.harmonics():
            iw = 1j * n * w
            out = out + K * np.real((a - 1j * b) * np.exp(iw * tt) / (iw * iw + nu * iw))
        return out

    y = ev(t)
    if normalization == "half_period":
        y = y - ev(0.5 * forcing.period)
    return y


# -- translation / remainder split ------------------------------------------

def _shifted_profile(wall: StaticWall, X: float):
    g = wall.grid
    xs = g.x + X
    th = 0.5 * np.pi * np.tanh(xs) + g.shift(wall.w0, X)
    d1 = 0.5 * np.pi / np.cosh(xs) ** 2 + g.shift(g.derivative(wall.w0), X)
    d2 = -np.pi * np.tanh(xs) / np.cosh(xs) ** 2 + g.shift(g.second_derivative(wall.w0), X)
    return th, d1, d2


def extract_translation(theta, wall: StaticWall, tol: float = 1e-14, max_iter: int = 60):
    """Split ``theta = theta0(. + X) + chi`` with ``<chi, theta0'(. + X)> = 0``.

    Safeguarded Newton in ``X`` started from the linear estimate; the root
    must stay within ``|X| <= L/4``.  Returns ``(X, chi)``.
    """
    g = wall.grid
    theta = np.asarray(theta, dtype=float)
    bound = 0.25 * g.L

    def F(X):
        th, d1, d2 = _shifted_profile(wall, X)
        r = theta - th
        return g.inner(r, d1), -g.inner(d1, d1) + g.inner(r, d2), r

    X = g.inner(theta - wall.theta0, wall.dtheta0) / wall.norm_sq_dtheta0
    if abs(X) > bound:
        raise NoRootInBracket(X, bound)
    f, df, r = F(X)
    scale = math.sqrt(wall.norm_sq_dtheta0)
    for _ in range(max_iter):
        if abs(f) <= tol * scale * max(1.0, g.norm(theta - wall.theta0)):
            break
        step = -f / df if df != 0 else 0.0
        lam = 1.0
        while True:
            Xn = X + lam * step
            if abs(Xn) > bound:
                if lam < 1e-6:
                    raise NoRootInBracket(Xn, bound)
                lam *= 0.5
                continue
            fn, dfn, rn = F(Xn)
            if abs(fn) < abs(f) or lam < 1e-6:
                break
            lam *= 0.5
        if abs(Xn - X) <= 1e-15 * max(1.0, abs(X)):
            X, f, df, r = Xn, fn, dfn, rn
            break
        X, f, df, r = Xn, fn, dfn, rn
    return float(X), r


# -- the orbit ---------------------------------------------------------------

def reflect_state(grid: Grid, s):
    """``S(w, v) = (-w(-x), -v(-x))``."""
    return -grid.reflect(s)


@dataclass
class PeriodicWall:
    grid: Grid
    epsilon: float
    period: float
    nu: float
    forcing: Forcing | None
    dt: float
    times: np.ndarray
    snapshots: np.ndarray          # (M, 2, N): w and w_t at times[m]
    X: np.ndarray
    chi_norm: np.ndarray
    residual: float                # full-period Poincare defect in the Z-norm
    wall: StaticWall
    half_residual: float = 0.0
    newton_history: list = field(default_factory=list)
    gmres_iterations: int = 0
    end_state: np.ndarray | None = field(default=None, repr=False)

    @property
    def M(self) -> int:
        return self.snapshots.shape[0]

    @property
    def initial_state(self) -> np.ndarray:
        return self.snapshots[0]

    def theta(self, m: int) -> np.ndarray:
        return self.grid.theta_ref + self.snapshots[m, 0]

    def theta_t(self, m: int) -> np.ndarray:
        return self.snapshots[m, 1]

    def translation_generator(self, m: int = 0) -> np.ndarray:
        """``(d_x theta_bar, d_t d_x theta_bar)`` at ``times[m]``."""
        g = self.grid
        return np.stack([g.dtheta_ref + g.derivative(self.snapshots[m, 0]), g.derivative(self.snapshots[m, 1])])

    def chi(self, m: int) -> np.ndarray:
        _, chi = extract_translation(self.theta(m), self.wall)
        return chi

    def linear_context(self) -> LinearContext:
        g = self.grid
        theta = g.theta_ref + self.snapshots[:, 0, :]
        c = np.cos(theta)
        cc = c * g.one_plus_half_laplacian_anti(c)
        return LinearContext(g, np.sin(theta), cc, self.nu, self.epsilon, self.forcing, self.period, self.wall)

    def X_pinned(self) -> np.ndarray:
        return self.X - self.X[self.M // 2]


def _steps(T: float, dt: float, M: int) -> int:
    n = int(round(T / dt))
    if abs(n * dt - T) > 1e-12 * T:
        raise ValidationError("solver.dt", "must divide the period exactly")
    if n % 2:
        raise ValidationError("solver.dt", "steps per period must be even")
    if M % 2 or n % M:
        raise ValidationError("solver.snapshots", "must be even and divide the number of steps per period")
    return n


def static_orbit(wall: StaticWall, period: float, nu: float, forcing=None, dt: float | None = None,
                 snapshots: int = 256) -> PeriodicWall:
    """The epsilon = 0 orbit: the static wall at rest."""
    g = wall.grid
    s0 = np.stack([wall.w0, np.zeros(g.N)])
    snaps = np.repeat(s0[None], snapshots, axis=0)
    return PeriodicWall(g, 0.0, period, nu, forcing, dt or period / 2048, period * np.arange(snapshots) / snapshots,
                        snaps, np.zeros(snapshots), np.zeros(snapshots), 0.0, wall, 0.0, [0.0], 0, s0.copy())


class _Scaling:
    """Map states to coordinates whose Euclidean norm is the ``H^1 x L^2`` norm."""

    def __init__(self, grid: Grid):
        self.grid = grid
        self.up = np.sqrt(1.0 - grid._d2)
        self.root_dx = math.sqrt(grid.dx)

    def to(self, s):
        g = self.grid
        w = g.multiply(s[0], self.up)
        return np.concatenate([w, s[1]]) * self.root_dx

    def back(self, y):
        g = self.grid
        N = g.N
        y = np.asarray(y) / self.root_dx
        return np.stack([g.multiply(y[:N], 1.0 / self.up), y[N:]])


class FarFieldPreconditioner:
    """Inverse of ``S G^n - I`` for the far-field constant-coefficient problem.

    Away from the wall ``sin theta = +-1`` and ``cos theta = 0``, so the
    linearization is ``u_tt + nu u_t + (1 + xi^2 + |xi|) u = 0``, diagonal in
    Fourier.  ``G`` is the exact 2x2 amplification matrix of one IMEX step per
    wavenumber and ``n`` the steps per half period.  On rfft coefficients
    (taken relative to ``x = -L``) the reflection ``S`` is ``-conj``: it is
    ``-1`` on real parts (even fields) and ``+1`` on imaginary parts.
    """

    def __init__(self, grid: Grid, dt: float, nu: float, n_steps: int):
        self.grid = grid
        N = grid.N
        a = 1.0 - grid._d2
        xi = grid.xi_r
        h = 0.5 * dt
        q = 0.25 * a * dt * dt
        K = xi.size
        G = np.zeros((K, 2, 2))
        for col in range(2):
            wh = np.full(K, 1.0 if col == 0 else 0.0)
            vh = np.full(K, 1.0 if col == 1 else 0.0)
            nh = -nu * vh - xi * wh
            vs = (vh - h * a * wh + h * nh) / (1.0 + a * h * h)
            ws = wh + h * vs
            ns = -nu * vs - xi * ws
            v1 = ((1.0 - q) * vh - a * dt * wh + dt * ns) / (1.0 + q)
            w1 = wh + h * (vh + v1)
            G[:, 0, col] = w1
            G[:, 1, col] = v1
        Gn = np.linalg.matrix_power(G, n_steps)
        eye = np.eye(2)
        self.inv_even = np.linalg.inv(-Gn - eye)
        self.inv_odd = np.linalg.inv(Gn - eye)

    def apply(self, s):
        g = self.grid
        fh = sfft.rfft(s, axis=-1)                    # (2, K)
        re = np.einsum("kij,jk->ik", self.inv_even, fh.real)
        im = np.einsum("kij,jk->ik", self.inv_odd, fh.imag)
        return sfft.irfft(re + 1j * im, n=g.N, axis=-1)


def initial_guess(wall: StaticWall, epsilon: float, forcing, nu: float, period: float) -> np.ndarray:
    """Leading-order ansatz: the wall translated by ``eps Y(0)`` moving at ``eps Y'(0)``."""
    ys = leading_order_Y(wall, forcing, nu, period, normalization="antisymmetric")
    g = wall.grid
    return np.stack([wall.w0 + epsilon * ys.Y[0] * wall.dtheta0, epsilon * ys.Ydot[0] * wall.dtheta0])


def find_periodic_wall(wall: StaticWall, epsilon: float, period: float = 1.0, forcing: Forcing | None = None,
                       nu: float = 0.5, dt: float | None = None, snapshots: int = 256, tol: float = 1e-9,
                       max_newton: int = 8, krylov_dim: int = 60, initial: np.ndarray | None = None,
                       eps_max: float = EPS_MAX, allow_large: bool = False, fd_step: float = 1e-7,
                       max_krylov_iter: int = 600) -> PeriodicWall:
    """Converge the oscillating wall for amplitude ``epsilon``.

    Newton stops once the full-period defect ``|P_T(s0) - s0|_Z`` is at most
    ``tol``.  ``initial`` overrides the leading-order starting state.
    """
    g = wall.grid
    if forcing is None:
        forcing = Forcing("cosine", 1.0, period)
    if abs(epsilon) > eps_max and not allow_large:
        raise ValidationError("physics.epsilon", f"|epsilon| <= {eps_max} outside continuation")
    if tol <= 0:
        raise ValidationError("solver.tol_orbit", "must be positive")
    dt = dt or period / 2048
    n = _steps(period, dt, snapshots)
    if epsilon == 0.0:
        return static_orbit(wall, period, nu, forcing, dt, snapshots)

    stepper = NonlinearStepper(g, dt, epsilon, nu, forcing)
    znorm = EnergyNorm(wall).norm
    sc = _Scaling(g)
    half = 0.5 * period
    pre = FarFieldPreconditioner(g, dt, nu, n // 2)

    def F(s):
        return reflect_state(g, propagate(stepper, s, 0.0, half)) - s

    s = initial_guess(wall, epsilon, forcing, nu, period) if initial is None else np.array(initial, dtype=float)
    r = F(s)
    res = float(znorm(r))
    history = [res]
    total_krylov = 0
    full = None
    target = 0.25 * tol
    for it in range(max_newton + 1):
        if res <= target:
            end = propagate(stepper, s, 0.0, period)
            full = float(znorm(end - s))
            log.info("newton %d: half-map defect %.3e, full-period defect %.3e", it, res, full)
            if full <= tol:
                break
            target = 0.1 * res
        if it == max_newton:
            break
        r_sc = sc.to(r)
        rn = float(np.linalg.norm(r_sc))
        y0 = sc.to(s)

        def jv(y, s=s, r=r):
            # right preconditioned: y -> D J P D^-1 y
            d = pre.apply(sc.back(y))
            nd = float(np.linalg.norm(sc.to(d)))
            if nd == 0.0:
                return np.zeros_like(y)
            h = fd_step * max(1.0, float(np.linalg.norm(y0))) / nd
            return sc.to((F(s + h * d) - r) / h)

        J = LinearOperator((2 * g.N, 2 * g.N), matvec=jv, dtype=float)
        count = [0]
        rtol = min(1e-2, max(0.1 * target / max(res, 1e-300), 1e-4))
        dy, info = gmres(J, -r_sc, rtol=rtol, atol=0.0, restart=krylov_dim, maxiter=max(1, max_krylov_iter // krylov_dim),
                         callback=lambda _: count.__setitem__(0, count[0] + 1), callback_type="pr_norm")
        total_krylov += count[0]
        ds = pre.apply(sc.back(dy))
        lam = 1.0
        while True:
            s_try = s + lam * ds
            r_try = F(s_try)
            res_try = float(znorm(r_try))
            if res_try < res or lam < 1e-3:
                break
            lam *= 0.5
        s, r, res = s_try, r_try, res_try
        history.append(res)
        log.info("newton %d: gmres %d its (info %d), step %.3g, half-map defect %.3e", it, count[0], info, lam, res)
    if full is None or full > tol:
        raise NonConvergence(len(history) - 1, full if full is not None else res, history,
                             hint="try a smaller epsilon, continuation from a nearby orbit, or a finer dt")
    return _record_orbit(wall, stepper, s, epsilon, period, nu, forcing, dt, snapshots, n,
                         full, history[-1], history, total_krylov)


def _record_orbit(wall, stepper, s0, epsilon, period, nu, forcing, dt, M, n, full, half_res, history, krylov):
    g = wall.grid
    every = n // M
    snaps = np.empty((M, 2, g.N))
    state = np.array(s0, dtype=float)
    for j in range(n):
        if j % every == 0:
            snaps[j // every] = state
        state = stepper.step(state, j * dt)
    znorm = EnergyNorm(wall).norm
    defect = float(znorm(state - s0))
    X = np.empty(M)
    chi_norm = np.empty(M)
    for m in range(M):
        X[m], chi = extract_translation(g.theta_ref + snaps[m, 0], wall)
        chi_norm[m] = g.h1_norm(chi)
    return PeriodicWall(g, float(epsilon), float(period), float(nu), forcing, float(dt),
                        period * np.arange(M) / M, snaps, X, chi_norm, defect, wall,
                        float(half_res), list(history), int(krylov), state)


def continue_orbit(previous: PeriodicWall, epsilon: float, **kw) -> PeriodicWall:
    """Solve at ``epsilon`` starting from ``previous`` scaled by the amplitude ratio."""
    wall = previous.wall
    g = wall.grid
    base = np.stack([wall.w0, np.zeros(g.N)])
    if previous.epsilon == 0.0:
        init = None
    else:
        init = base + (epsilon / previous.epsilon) * (previous.initial_state - base)
    kw.setdefault("period", previous.period)
    kw.setdefault("nu", previous.nu)
    kw.setdefault("forcing", previous.forcing)
    kw.setdefault("dt", previous.dt)
    kw.setdefault("snapshots", previous.M)
    return find_periodic_wall(wall, epsilon, initial=init, **kw)


def sweep(wall: StaticWall, epsilons, **kw) -> list[PeriodicWall]:
    """Continuation in epsilon, smallest amplitude first."""
    out = []
    prev = None
    for eps in sorted(epsilons, key=abs):
        orbit = find_periodic_wall(wall, eps, **kw) if prev is None else continue_orbit(prev, eps, **kw)
        out.append(orbit)
        prev = orbit
    return out


def slope_loglog(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])
