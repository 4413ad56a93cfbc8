"""Littlewood-Paley blocks, partial sums and rescaled weighted Besov norms.

The low-frequency profile chi is a smooth radial plateau (1 near the origin,
0 outside |xi| = 4/3) and phi(xi) = chi(xi/2) - chi(xi).  Blocks are
Delta_{-1} = chi(D) and Delta_j = phi(2^{-j} D) for j >= 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .grid import (Grid, SpectralField, WeightSpec, fftn, ifftn, lp_norm_array)


def smooth_step(t: np.ndarray) -> np.ndarray:
    """C^infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    out = np.zeros_like(t)
    out[t >= 1.0] = 1.0
    mid = (t > 0.0) & (t < 1.0)
    tm = t[mid]
    a = np.exp(-1.0 / tm)
    b = np.exp(-1.0 / (1.0 - tm))
    out[mid] = a / (a + b)
    return out


def plateau(rho: np.ndarray, inner: float, outer: float) -> np.ndarray:
    """Radial plateau: 1 for rho <= inner, 0 for rho >= outer, smooth between."""
    return 1.0 - smooth_step((np.asarray(rho, dtype=float) - inner) / (outer - inner))


@dataclass(frozen=True)
class PartitionPair:
    """Admissible pair (chi, phi) of radial profiles.

    chi equals 1 for |xi| <= inner and vanishes for |xi| >= outer; the
    defaults keep supp chi inside B(0, 4/3) with chi = 1 on B(0, 3/4).
    """

    inner: float = 0.8
    outer: float = 4.0 / 3.0

    def __post_init__(self):
        if not (0.75 <= self.inner < self.outer <= 4.0 / 3.0):
            raise ValueError("need 3/4 <= inner < outer <= 4/3")

    def chi(self, rho) -> np.ndarray:
        return plateau(rho, self.inner, self.outer)

    def phi(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=float)
        return self.chi(rho / 2.0) - self.chi(rho)

    def block_profile(self, j: int, rho) -> np.ndarray:
        """phi_j(rho); j = -1 gives chi."""
        if j == -1:
            return self.chi(rho)
        return self.phi(np.asarray(rho, dtype=float) / 2.0 ** j)

    def partial_profile(self, j: int, rho) -> np.ndarray:
        """Symbol of S_j = sum_{n=-1}^{j-1} Delta_n, i.e. chi(2^{-j} rho); zero for j = -1."""
        rho = np.asarray(rho, dtype=float)
        if j <= -1:
            return np.zeros_like(rho)
        return self.chi(rho / 2.0 ** j)

    def jmax(self, grid: Grid) -> int:
        """Smallest block index whose partial sum covers every lattice point."""
        rmax = math.sqrt(grid.d) * grid.xi_nyquist
        return max(0, math.ceil(math.log2(rmax / self.inner)) - 1)


DEFAULT_PAIR = PartitionPair()


def build_partition_pair(grid: Grid | None = None, inner: float = 0.8, outer: float = 4.0 / 3.0) -> PartitionPair:
    """Return the partition pair; ``grid`` is accepted for API symmetry."""
    return PartitionPair(inner, outer)


@lru_cache(maxsize=16)
def _block_symbols(grid: Grid, pair: PartitionPair) -> tuple:
    rho = grid.xi_abs
    J = pair.jmax(grid)
    return tuple(pair.block_profile(j, rho) for j in range(-1, J + 1))


def block_symbols(grid: Grid, pair: PartitionPair = DEFAULT_PAIR) -> tuple:
    """Block multipliers on the lattice, index 0 is Delta_{-1}."""
    return _block_symbols(grid, pair)


def jmax(grid: Grid, pair: PartitionPair = DEFAULT_PAIR) -> int:
    return pair.jmax(grid)


def partition_residual(grid: Grid, pair: PartitionPair = DEFAULT_PAIR) -> float:
    """max |chi + sum_j phi_j - 1| over the lattice."""
    total = sum(block_symbols(grid, pair))
    return float(np.max(np.abs(total - 1.0)))


def blocks_array(a: np.ndarray, grid: Grid, pair: PartitionPair = DEFAULT_PAIR, spectral: bool = False) -> list:
    """Physical block arrays Delta_{-1} a, ..., Delta_jmax a."""
    ah = a if spectral else fftn(a)
    return [ifftn(s * ah) for s in block_symbols(grid, pair)]


def _as_field(f) -> SpectralField:
    if not isinstance(f, SpectralField):
        raise TypeError("expected a SpectralField")
    return f


def dyadic_block(f: SpectralField, j: int, pair: PartitionPair = DEFAULT_PAIR) -> SpectralField:
    """Delta_j f; j = -1 is the chi block."""
    f = _as_field(f)
    J = pair.jmax(f.grid)
    if not (-1 <= j <= J):
        raise ValueError(f"block index {j} outside [-1, {J}]")
    s = block_symbols(f.grid, pair)[j + 1]
    return SpectralField(f.grid, ifftn(s * f.spectral().values))


def partial_sum(f: SpectralField, j: int, pair: PartitionPair = DEFAULT_PAIR) -> SpectralField:
    """S_j f = sum_{n=-1}^{j-1} Delta_n f via the single multiplier chi(2^{-j} xi)."""
    f = _as_field(f)
    if j < -1:
        raise ValueError("partial sum index must be >= -1")
    s = pair.partial_profile(j, f.grid.xi_abs)
    return SpectralField(f.grid, ifftn(s * f.spectral().values))


@dataclass(frozen=True)
class BesovSpec:
    """Exponents and weight of B^r_{p,q}(rho, lambda)."""

    r: float
    p: float = 2.0
    q: float = 2.0
    weight: WeightSpec = field(default_factory=WeightSpec)

    def __post_init__(self):
        if self.p < 1 or self.q < 1:
            raise ValueError("p and q must be >= 1")


def block_norms(a: np.ndarray, grid: Grid, p: float, weight: WeightSpec = WeightSpec(),
                pair: PartitionPair = DEFAULT_PAIR) -> np.ndarray:
    """Weighted L^p norms of every block of the physical array ``a``."""
    wt = None if weight.eta == 0 else weight(*grid.x)
    ah = fftn(a)
    out = []
    for s in block_symbols(grid, pair):
        out.append(lp_norm_array(ifftn(s * ah), p, grid.cell, wt))
    return np.array(out)


def combine_blocks(norms: np.ndarray, r: float, q: float) -> float:
    """(sum_n (2^{nr} b_n)^q)^{1/q} with n starting at -1; q = inf gives the sup."""
    n = np.arange(-1, len(norms) - 1)
    v = np.asarray(norms) * 2.0 ** (n * r)
    if np.isinf(q):
        return float(v.max())
    vmax = v.max()
    if vmax == 0:
        return 0.0
    return float(vmax * np.sum((v / vmax) ** q) ** (1.0 / q))


def besov_norm(f: SpectralField, spec: BesovSpec, pair: PartitionPair = DEFAULT_PAIR) -> float:
    """Truncated norm ||f||_{B^r_{p,q}(rho, lambda)} over blocks -1..jmax."""
    f = _as_field(f)
    b = block_norms(f.physical().values, f.grid, spec.p, spec.weight, pair)
    return combine_blocks(b, spec.r, spec.q)


def besov_norm_array(a: np.ndarray, grid: Grid, r: float, p: float = 2.0, q: float = 2.0,
                     weight: WeightSpec = WeightSpec(), pair: PartitionPair = DEFAULT_PAIR) -> float:
    return combine_blocks(block_norms(a, grid, p, weight, pair), r, q)


def lifting_symbol(grid: Grid, s: float) -> np.ndarray:
    return (1.0 + grid.xi_abs ** 2) ** (0.5 * s)


def lifting_apply(f: SpectralField, s: float) -> SpectralField:
    """(I - Delta)^{s/2} f."""
    f = _as_field(f)
    if s == 0:
        return f.physical()
    return SpectralField(f.grid, ifftn(lifting_symbol(f.grid, s) * f.spectral().values))


@dataclass
class AdmissibilityReport:
    max_ratio: float
    bound: float
    passed: bool
    samples: int


def check_weight_admissible(sampler, eta: float, count: int = 4000, c: float | None = None,
                            d: int = 2, radius: float = 200.0, seed: int = 0) -> AdmissibilityReport:
    """Sample rho(x) / (rho(y) <x-y>^eta) and compare its maximum with ``c``.

    Points are drawn along random rays with log-uniform radii up to
    ``radius`` (plus the origin), so growth along rays is exposed.  The
    default ``c`` is 2^{eta/2}, the Peetre constant for <x>^{+-eta}.
    """
    rng = np.random.default_rng(seed)
    if c is None:
        c = 2.0 ** (eta / 2.0)

    def draw(n):
        u = rng.normal(size=(n, d))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        rad = np.exp(rng.uniform(np.log(1e-3), np.log(radius), size=n))
        pts = u * rad[:, None]
        pts[: max(1, n // 20)] = 0.0
        return pts

    x = draw(count)
    y = draw(count)
    y = y[rng.permutation(count)]
    rx = np.asarray(sampler(x), dtype=float)
    ry = np.asarray(sampler(y), dtype=float)
    if np.any(rx <= 0) or np.any(ry <= 0) or not (np.all(np.isfinite(rx)) and np.all(np.isfinite(ry))):
        raise ValueError("weight sampler returned a non-positive or non-finite value")
    jx = np.sqrt(1.0 + np.sum((x - y) ** 2, axis=1))
    ratio = rx / (ry * jx ** eta)
    m = float(ratio.max())
    return AdmissibilityReport(m, c, bool(m <= c * (1 + 1e-12)), count)
