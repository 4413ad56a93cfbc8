"""Bony paraproduct and resonant product, and the coefficient operators
Xi (multiplication by a rough coefficient) and Phi (smooth spatial cutoff).

With blocks covering the whole lattice, f < g + f > g + f o g reproduces
the grid pointwise product exactly; the split is what carries meaning when
one factor has negative regularity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid, SpectralField, fftn, ifftn
from .littlewood_paley import DEFAULT_PAIR, PartitionPair, blocks_array, plateau


@dataclass(frozen=True)
class BonyTriple:
    lt: SpectralField
    gt: SpectralField
    res: SpectralField

    def total(self) -> SpectralField:
        return SpectralField(self.lt.grid, self.lt.values + self.gt.values + self.res.values)


def _low_sums(blocks: list) -> list:
    """low[j+1] = S_{j-1} f = sum_{n <= j-2} Delta_n f for j = -1..jmax."""
    out = []
    acc = np.zeros_like(blocks[0])
    for idx in range(len(blocks)):
        # block j = idx - 1 needs blocks n = -1..j-2, i.e. indices 0..idx-2
        out.append(acc.copy())
        if idx - 1 >= 0:
            acc = acc + blocks[idx - 1]
    return out


def paraproduct_arrays(fb: list, gb: list) -> np.ndarray:
    """sum_j S_{j-1} f Delta_j g from precomputed block lists."""
    low = _low_sums(fb)
    out = np.zeros_like(gb[0])
    for idx in range(len(gb)):
        out += low[idx] * gb[idx]
    return out


def resonant_arrays(fb: list, gb: list) -> np.ndarray:
    """sum_{|i-j| <= 1} Delta_i f Delta_j g from precomputed block lists."""
    n = len(fb)
    out = np.zeros_like(gb[0])
    for j in range(n):
        near = fb[j].copy()
        if j > 0:
            near += fb[j - 1]
        if j + 1 < n:
            near += fb[j + 1]
        out += near * gb[j]
    return out


def _check_pair(f: SpectralField, g: SpectralField) -> Grid:
    if f.grid != g.grid:
        raise ValueError(f"grid mismatch: {f.grid} vs {g.grid}")
    return f.grid


def bony_decompose(f: SpectralField, g: SpectralField, pair: PartitionPair = DEFAULT_PAIR) -> BonyTriple:
    """Return (f < g, f > g, f o g), sums truncated at jmax."""
    grid = _check_pair(f, g)
    fb = blocks_array(f.physical().values, grid, pair)
    gb = blocks_array(g.physical().values, grid, pair)
    lt = paraproduct_arrays(fb, gb)
    gt = paraproduct_arrays(gb, fb)
    res = resonant_arrays(fb, gb)
    return BonyTriple(SpectralField(grid, lt), SpectralField(grid, gt), SpectralField(grid, res))


def paraproduct(f: SpectralField, g: SpectralField, pair: PartitionPair = DEFAULT_PAIR) -> SpectralField:
    grid = _check_pair(f, g)
    fb = blocks_array(f.physical().values, grid, pair)
    gb = blocks_array(g.physical().values, grid, pair)
    return SpectralField(grid, paraproduct_arrays(fb, gb))


def resonant(f: SpectralField, g: SpectralField, pair: PartitionPair = DEFAULT_PAIR) -> SpectralField:
    grid = _check_pair(f, g)
    fb = blocks_array(f.physical().values, grid, pair)
    gb = blocks_array(g.physical().values, grid, pair)
    return SpectralField(grid, resonant_arrays(fb, gb))


class BonyMultiplier:
    """Bilinear Bony product with a fixed first factor, blocks cached.

    ``apply(u)`` returns a < u + a > u + a o u.
    """

    def __init__(self, a: np.ndarray, grid: Grid, pair: PartitionPair = DEFAULT_PAIR):
        self.grid = grid
        self.pair = pair
        self.ab = blocks_array(np.asarray(a, dtype=complex), grid, pair)
        self.alow = _low_sums(self.ab)
        self.zero = not np.any(a)

    def apply(self, u: np.ndarray) -> np.ndarray:
        if self.zero:
            return np.zeros(self.grid.shape, dtype=complex)
        ub = blocks_array(u, self.grid, self.pair)
        ulow = _low_sums(ub)
        n = len(ub)
        out = np.zeros(self.grid.shape, dtype=complex)
        for j in range(n):
            near = self.ab[j].copy()
            if j > 0:
                near += self.ab[j - 1]
            if j + 1 < n:
                near += self.ab[j + 1]
            out += self.alow[j] * ub[j] + ulow[j] * self.ab[j] + near * ub[j]
        return out


def xi_apply(V: SpectralField, u: SpectralField, lam: float = 1.0, pair: PartitionPair = DEFAULT_PAIR) -> SpectralField:
    """Xi u = V < u + V > u + V o u for the already rescaled coefficient V.

    ``lam`` only labels the scale the coefficient lives on; the operator
    itself is the Bony product.
    """
    grid = _check_pair(V, u)
    if not lam > 0:
        raise ValueError("lambda must be positive")
    op = BonyMultiplier(V.physical().values, grid, pair)
    return SpectralField(grid, op.apply(u.physical().values))


def cutoff_profile(r: np.ndarray, R: float, width: float | None = None) -> np.ndarray:
    """phi_R: 1 on B(0, R), 0 outside B(0, R + width); width defaults to R."""
    if width is None:
        width = R
    return plateau(r, R, R + width)


def cutoff_field(grid: Grid, R: float, lam: float = 1.0, width: float | None = None) -> np.ndarray:
    """(phi_R)_lambda(x) = phi_R(lambda x) on the grid."""
    if width is None:
        width = R
    if (R + width) / lam > grid.L:
        raise ValueError(f"cutoff support radius {(R + width) / lam:g} exceeds the box half length {grid.L:g}")
    return cutoff_profile(lam * grid.r, R, width)


def phi_apply(u: SpectralField, R: float, lam: float = 1.0, width: float | None = None,
              pair: PartitionPair = DEFAULT_PAIR) -> SpectralField:
    """Phi_{R,lambda} u: Bony product of the rescaled cutoff with u."""
    u = u.physical()
    c = cutoff_field(u.grid, R, lam, width)
    op = BonyMultiplier(c, u.grid, pair)
    return SpectralField(u.grid, op.apply(u.values))


def synth_rough_field(grid: Grid, alpha: float, seed: int, support: float | None = None,
                      complex_valued: bool = False, pair: PartitionPair = DEFAULT_PAIR,
                      jtop: int | None = None) -> np.ndarray:
    """Random field whose block amplitudes decay like 2^{-n alpha}.

    White noise is split into blocks; block n is normalised to unit sup norm
    and scaled by 2^{-n alpha}.  ``support`` multiplies by a smooth cutoff
    of that radius (1 on B(0, support/2)).  ``jtop`` drops blocks above it.
    """
    rng = np.random.default_rng(seed)
    w = rng.normal(size=grid.shape)
    if complex_valued:
        w = w + 1j * rng.normal(size=grid.shape)
    bl = blocks_array(w.astype(complex), grid, pair)
    out = np.zeros(grid.shape, dtype=complex)
    for idx, b in enumerate(bl):
        n = idx - 1
        if jtop is not None and n > jtop:
            break
        m = np.abs(b).max()
        if m > 0:
            out += 2.0 ** (-n * alpha) * b / m
    if support is not None:
        out = out * cutoff_profile(grid.r, support / 2.0, support / 2.0)
    if not complex_valued:
        out = out.real.astype(complex)
    return out
