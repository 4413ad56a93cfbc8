"""Periodic-box discretization of R^d with unitary FFTs.

The box is [-L, L)^d sampled with N points per axis.  Frequencies use the
angular convention, so the Laplacian has symbol -|xi|^2 and a lattice plane
wave exp(i xi_0 . x) transforms to a single spectral mode.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Union

import numpy as np
import scipy.fft as sfft

PHYS = "phys"
FREQ = "freq"

_WORKERS = 1


def set_fft_workers(n: int) -> None:
    """Set the number of threads used by every FFT call (advisory)."""
    global _WORKERS
    _WORKERS = max(1, int(n))


def fftn(a: np.ndarray) -> np.ndarray:
    return sfft.fftn(a, norm="ortho", workers=_WORKERS)


def ifftn(a: np.ndarray) -> np.ndarray:
    return sfft.ifftn(a, norm="ortho", workers=_WORKERS)


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform periodic grid on [-L, L)^d.

    Parameters
    ----------
    d : int
        Spatial dimension, 2 or 3.
    N : int
        Points per axis; even and at least 8.
    L : float
        Half box length.
    """

    d: int
    N: int
    L: float

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.d}")
        if int(self.N) != self.N or self.N < 8 or self.N % 2:
            raise ValueError(f"N must be an even integer >= 8, got {self.N}")
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "L", float(self.L))

    def __eq__(self, other):
        return (isinstance(other, Grid) and self.d == other.d
                and self.N == other.N and self.L == other.L)

    def __hash__(self):
        return hash((self.d, self.N, self.L))

    def __repr__(self):
        return f"Grid(d={self.d}, N={self.N}, L={self.L!r})"

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.d

    @property
    def cell(self) -> float:
        """Cell measure h^d."""
        return self.h ** self.d

    @cached_property
    def x1d(self) -> np.ndarray:
        return -self.L + self.h * np.arange(self.N)

    @cached_property
    def xi1d(self) -> np.ndarray:
        # (pi/L) m in FFT order, m = 0..N/2-1, -N/2..-1
        return 2.0 * np.pi * sfft.fftfreq(self.N, d=self.h)

    @property
    def xi_nyquist(self) -> float:
        return np.pi / self.h

    @cached_property
    def x(self) -> tuple:
        """Physical coordinates as a tuple of broadcastable arrays."""
        return _open_mesh(self.x1d, self.d)

    @cached_property
    def xi(self) -> tuple:
        """Frequency coordinates as a tuple of broadcastable arrays."""
        return _open_mesh(self.xi1d, self.d)

    @cached_property
    def r(self) -> np.ndarray:
        return np.sqrt(sum(c * c for c in self.x))

    @cached_property
    def xi_abs(self) -> np.ndarray:
        return np.sqrt(sum(c * c for c in self.xi))

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        """Boolean array, True on modes carrying a Nyquist index on any axis."""
        m = np.zeros(self.shape, dtype=bool)
        for ax in range(self.d):
            idx = [slice(None)] * self.d
            idx[ax] = self.N // 2
            m[tuple(idx)] = True
        return m

    def scaled(self, factor: float) -> "Grid":
        """Grid with the same N and box half length L*factor."""
        return Grid(self.d, self.N, self.L * factor)


def _open_mesh(v: np.ndarray, d: int) -> tuple:
    out = []
    for ax in range(d):
        shape = [1] * d
        shape[ax] = v.size
        out.append(v.reshape(shape))
    return tuple(out)


def make_grid(d: int, N: int, L: float) -> Grid:
    """Build a validated grid; see :class:`Grid`."""
    return Grid(d, N, L)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Complex samples on a grid, tagged as physical or frequency data."""

    grid: Grid
    values: np.ndarray
    rep: str = PHYS

    def __post_init__(self):
        if self.rep not in (PHYS, FREQ):
            raise ValueError(f"unknown representation {self.rep!r}")
        v = np.asarray(self.values)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "values", v)

    def physical(self) -> "SpectralField":
        return self if self.rep == PHYS else transform(self, "inv")

    def spectral(self) -> "SpectralField":
        return self if self.rep == FREQ else transform(self, "fwd")

    def __add__(self, other):
        _check_same(self, other)
        a, b = self.physical(), other.physical()
        return SpectralField(self.grid, a.values + b.values)

    def __sub__(self, other):
        _check_same(self, other)
        a, b = self.physical(), other.physical()
        return SpectralField(self.grid, a.values - b.values)

    def __mul__(self, c):
        if isinstance(c, SpectralField):
            _check_same(self, c)
            return SpectralField(self.grid, self.physical().values * c.physical().values)
        return SpectralField(self.grid, self.values * c, self.rep)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.grid, -self.values, self.rep)


FieldLike = Union[SpectralField, np.ndarray]


def _check_same(a: SpectralField, b: SpectralField) -> None:
    if a.grid != b.grid:
        raise ValueError(f"grid mismatch: {a.grid} vs {b.grid}")


def make_field(grid: Grid, values) -> SpectralField:
    """Wrap physical samples (array or callable of coordinates) as a field."""
    if callable(values):
        values = values(*grid.x)
    return SpectralField(grid, np.broadcast_to(np.asarray(values, dtype=complex), grid.shape).copy())


def transform(f: SpectralField, direction: str) -> SpectralField:
    """Unitary DFT between physical and frequency representations.

    ``direction`` is "fwd" (physical to frequency) or "inv".
    """
    if direction == "fwd":
        if f.rep != PHYS:
            raise ValueError("forward transform needs a physical field")
        return SpectralField(f.grid, fftn(f.values), FREQ)
    if direction == "inv":
        if f.rep != FREQ:
            raise ValueError("inverse transform needs a frequency field")
        return SpectralField(f.grid, ifftn(f.values), PHYS)
    raise ValueError(f"direction must be 'fwd' or 'inv', got {direction!r}")


@dataclass(frozen=True)
class WeightSpec:
    """Weight <lambda x>^(sign*eta)."""

    eta: float = 0.0
    sign: int = 1
    lam: float = 1.0

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError("eta must be non-negative")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if not self.lam > 0:
            raise ValueError("lambda must be positive")

    def __call__(self, *x) -> np.ndarray:
        if self.eta == 0:
            return np.ones(np.broadcast_shapes(*(np.shape(c) for c in x)))
        r2 = sum((self.lam * c) ** 2 for c in x)
        return (1.0 + r2) ** (0.5 * self.sign * self.eta)


def japanese(x: np.ndarray) -> np.ndarray:
    """<x> = (1 + |x|^2)^(1/2) for an array of shape (..., d)."""
    return np.sqrt(1.0 + np.sum(np.asarray(x) ** 2, axis=-1))


def weight_field(w: WeightSpec, grid: Grid) -> SpectralField:
    return SpectralField(grid, w(*grid.x).astype(complex) * np.ones(grid.shape))


def lp_norm_array(a: np.ndarray, p: float, cell: float, weight=None) -> float:
    """Riemann-sum L^p norm of samples, optionally times a weight array."""
    v = np.abs(a)
    if weight is not None:
        v = v * weight
    if np.isinf(p):
        return float(v.max()) if v.size else 0.0
    if p == 2:
        return float(np.sqrt(np.sum(v * v) * cell))
    return float((np.sum(v ** p) * cell) ** (1.0 / p))


def weighted_lp_norm(f: FieldLike, p: float, w: WeightSpec = WeightSpec(), grid: Grid | None = None) -> float:
    """Weighted L^p norm ||f||_{L^p(rho_lambda)} by Riemann sum.

    Parameters
    ----------
    f : SpectralField or ndarray
        Field; physical samples are used.
    p : float
        Exponent in [1, inf].
    w : WeightSpec
        Weight <lambda x>^(sign eta).
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if isinstance(f, SpectralField):
        grid = f.grid
        a = f.physical().values
    else:
        a = np.asarray(f)
        if grid is None:
            raise ValueError("grid required for array input")
    wt = None if w.eta == 0 else w(*grid.x)
    return lp_norm_array(a, p, grid.cell, wt)


Symbol = Union[np.ndarray, Callable[..., np.ndarray]]


def evaluate_symbol(symbol: Symbol, grid: Grid) -> np.ndarray:
    s = symbol(*grid.xi) if callable(symbol) else symbol
    s = np.broadcast_to(np.asarray(s), grid.shape)
    if not np.all(np.isfinite(s)):
        raise ValueError("symbol is not finite on the frequency lattice")
    return s


def apply_multiplier(f: SpectralField, symbol: Symbol) -> SpectralField:
    """Return F^{-1}(symbol(xi) * F f) as a physical field.

    ``symbol`` is either an array on the lattice (FFT order) or a callable
    taking the broadcastable frequency coordinates.
    """
    s = evaluate_symbol(symbol, f.grid)
    fh = f.spectral().values
    return SpectralField(f.grid, ifftn(s * fh))


def multiply_array(a: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Array version of :func:`apply_multiplier` without checks."""
    return ifftn(s * fftn(a))
