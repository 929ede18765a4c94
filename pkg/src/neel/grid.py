"""Uniform periodic grid on [-L, L) and its Fourier multipliers.

Transform convention
--------------------
Fields are sampled at ``x_j = -L + j*dx`` with ``dx = 2L/N``.  The forward
transform returns Fourier-series coefficients

    c_k = (1/N) sum_j f_j exp(-i xi_k x_j),      xi_k = pi k / L,

so that ``f_j = sum_k c_k exp(i xi_k x_j)``.  A constant field 1 maps to
``c_0 = 1``.  With the spectral norm ``||c||^2 = 2L sum_k |c_k|^2`` Parseval
holds without extra factors: ``dx sum_j f_j^2 = 2L sum_k |c_k|^2``.

The odd-derivative multiplier ``i xi`` drops the Nyquist mode; the second
derivative uses the same truncation, so ``second_derivative`` equals
``derivative`` applied twice on every field.  ``|xi|`` keeps the Nyquist mode.

A wall phase winds by pi across the box, so ``cos theta`` and ``sin theta``
(and products like ``u sin theta``) are antiperiodic there.  The ``*_anti``
methods apply multipliers to such fields using the half-integer wavenumbers
``eta_k = pi (k + 1/2) / L``; the reflection ``x -> -x`` of an antiperiodic
field flips the sign of the sample at ``x = -L``.

All array-level methods act along the last axis and accept batches.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .errors import GridMismatch


@dataclass(frozen=True)
class Grid:
    L: float
    N: int
    x: np.ndarray = field(init=False, repr=False, compare=False)
    xi: np.ndarray = field(init=False, repr=False, compare=False)
    dx: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.N % 2 or self.N < 16:
            raise ValueError(f"N must be even and >= 16, got {self.N}")
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")
        L, N = float(self.L), int(self.N)
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "N", N)
        dx = 2.0 * L / N
        object.__setattr__(self, "dx", dx)
        object.__setattr__(self, "x", -L + dx * np.arange(N))
        # fft ordering: k = 0..N/2-1, -N/2..-1
        k = np.fft.fftfreq(N, d=1.0 / N)
        object.__setattr__(self, "xi", np.pi * k / L)
        kr = np.arange(N // 2 + 1)
        xr = np.pi * kr / L
        d1 = 1j * xr
        d1[-1] = 0.0
        d2 = -(xr**2)
        d2[-1] = 0.0
        object.__setattr__(self, "_xi_r", xr)
        object.__setattr__(self, "_d1", d1)
        object.__setattr__(self, "_d2", d2)
        object.__setattr__(self, "_abs", xr.copy())
        # (-1)^k phase aligning the DFT with the x_j = -L + j dx origin
        object.__setattr__(self, "_phase", np.where(np.arange(N) % 2 == 0, 1.0, -1.0))
        # rfft Parseval weights: dx/N * (1, 2, ..., 2, 1)
        wts = np.full(N // 2 + 1, 2.0)
        wts[0] = 1.0
        wts[-1] = 1.0
        object.__setattr__(self, "_pw", wts * dx / N)
        object.__setattr__(self, "_reflect", (-np.arange(N)) % N)
        j = np.arange(N)
        object.__setattr__(self, "_twist", np.exp(-1j * np.pi * j / N))
        eta = np.pi * (k + 0.5) / L
        object.__setattr__(self, "_abs_anti", np.abs(eta))

    # -- reference phase ------------------------------------------------
    @property
    def theta_ref(self) -> np.ndarray:
        return 0.5 * np.pi * np.tanh(self.x)

    @property
    def dtheta_ref(self) -> np.ndarray:
        return 0.5 * np.pi / np.cosh(self.x) ** 2

    @property
    def d2theta_ref(self) -> np.ndarray:
        # spectral derivative of the sampled sech^2 keeps energy/gradient discretely consistent
        return self.derivative(self.dtheta_ref)

    @property
    def xi_r(self) -> np.ndarray:
        """Nonnegative wavenumbers matching ``rfft`` output."""
        return self._xi_r

    @property
    def xi_max(self) -> float:
        return np.pi / self.dx

    # -- transforms -----------------------------------------------------
    def rfft(self, f):
        return sfft.rfft(f, axis=-1)

    def irfft(self, fh):
        return sfft.irfft(fh, n=self.N, axis=-1)

    def multiply(self, f, symbol):
        return sfft.irfft(sfft.rfft(f, axis=-1) * symbol, n=self.N, axis=-1)

    def derivative(self, f):
        return self.multiply(f, self._d1)

    def second_derivative(self, f):
        return self.multiply(f, self._d2)

    def half_laplacian(self, f):
        return self.multiply(f, self._abs)

    def one_plus_half_laplacian(self, f):
        return self.multiply(f, 1.0 + self._abs)

    def multiply_anti(self, f, symbol):
        """Apply a multiplier given on ``eta`` (fft order) to an antiperiodic field."""
        g = sfft.fft(f * self._twist, axis=-1) * symbol
        return (sfft.ifft(g, axis=-1) * np.conj(self._twist)).real

    def half_laplacian_anti(self, f):
        return self.multiply_anti(f, self._abs_anti)

    def one_plus_half_laplacian_anti(self, f):
        return self.multiply_anti(f, 1.0 + self._abs_anti)

    def reflect_anti(self, f):
        r = np.take(f, self._reflect, axis=-1).copy()
        r[..., 0] *= -1.0
        return r

    def shift(self, f, a: float):
        """Spectral interpolation of ``f(x + a)``."""
        return self.multiply(f, np.exp(1j * self._xi_r * a))

    def reflect(self, f):
        """``f(-x)`` on the grid (index j -> N - j mod N)."""
        return np.take(f, self._reflect, axis=-1)

    def odd_part(self, f):
        return 0.5 * (f - self.reflect(f))

    def even_part(self, f):
        return 0.5 * (f + self.reflect(f))

    # -- inner products and norms --------------------------------------
    def inner(self, f, g):
        return self.dx * np.sum(f * g, axis=-1)

    def norm(self, f):
        return np.sqrt(self.inner(f, f))

    def h1_norm(self, f):
        fh = sfft.rfft(f, axis=-1)
        return np.sqrt(np.sum(self._pw * (1.0 - self._d2) * np.abs(fh) ** 2, axis=-1))

    def spectral_norm_sq(self, fh_r):
        """``||f||^2`` from rfft coefficients (Parseval)."""
        return np.sum(self._pw * np.abs(fh_r) ** 2, axis=-1)

    def h_half_form(self, f, g, anti: bool = False):
        """``b[f, g] = sum (1 + |xi|) f_hat g_hat^*`` in the box normalization."""
        if anti:
            return self.inner(f, self.one_plus_half_laplacian_anti(g))
        fh = sfft.rfft(f, axis=-1)
        gh = sfft.rfft(g, axis=-1)
        return np.sum(self._pw * (1.0 + self._abs) * (fh * np.conj(gh)).real, axis=-1)

    def same_as(self, other: "Grid") -> bool:
        return self.L == other.L and self.N == other.N


@dataclass
class Field:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.N,):
            raise ValueError(f"expected {self.grid.N} samples, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    def _check(self, other: "Field"):
        if not self.grid.same_as(other.grid):
            raise GridMismatch("fields live on different grids",
                               left=(self.grid.L, self.grid.N), right=(other.grid.L, other.grid.N))

    def __add__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return Field(self.grid, self.values + other.values)
        return Field(self.grid, self.values + other)

    def __sub__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return Field(self.grid, self.values - other.values)
        return Field(self.grid, self.values - other)

    def __mul__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return Field(self.grid, self.values * other.values)
        return Field(self.grid, self.values * other)

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.grid, -self.values)

    def norm(self) -> float:
        return float(self.grid.norm(self.values))


@dataclass
class SpectralField:
    grid: Grid
    coefficients: np.ndarray

    def norm_sq(self) -> float:
        return 2.0 * self.grid.L * float(np.sum(np.abs(self.coefficients) ** 2))

    def hermitian_defect(self) -> float:
        c = self.coefficients
        # partner of index k is -k mod N; Nyquist is its own partner
        partner = np.conj(c[(-np.arange(self.grid.N)) % self.grid.N])
        scale = max(np.max(np.abs(c)), np.finfo(float).tiny)
        return float(np.max(np.abs(c - partner)) / scale)


def forward_transform(f: Field) -> SpectralField:
    g = f.grid
    return SpectralField(g, g._phase * sfft.fft(f.values) / g.N)


def inverse_transform(fh: SpectralField) -> Field:
    g = fh.grid
    vals = sfft.ifft(g._phase * fh.coefficients * g.N)
    return Field(g, vals.real)


def half_laplacian(f: Field) -> Field:
    return Field(f.grid, f.grid.half_laplacian(f.values))


def derivative(f: Field) -> Field:
    return Field(f.grid, f.grid.derivative(f.values))


def second_derivative(f: Field) -> Field:
    return Field(f.grid, f.grid.second_derivative(f.values))


def h_half_form(f: Field, g: Field) -> float:
    f._check(g)
    return float(f.grid.h_half_form(f.values, g.values))
