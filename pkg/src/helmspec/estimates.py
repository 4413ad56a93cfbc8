"""Empirical operator-norm sweeps for the resolvent, scaling and paraproduct bounds.

Each sweep measures a family maximum of a norm ratio, divides by the
predicted bound and reports quotients.  Family maxima only bound the true
operator norm from below, so a stable quotient column is evidence that the
bound's parameter dependence is not violated over the tested range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, SpectralField, WeightSpec, fftn, ifftn, lp_norm_array
from .littlewood_paley import DEFAULT_PAIR, PartitionPair, blocks_array, block_norms, combine_blocks, plateau
from .paraproduct import cutoff_profile, paraproduct_arrays, resonant_arrays, synth_rough_field
from .resolvents import FaddeevParams, outgoing_apply, symbol_m

STABILITY = 50.0


@dataclass
class SweepRow:
    params: tuple
    measured: float
    bound: float
    quotient: float = float("nan")
    passed: bool = True


@dataclass
class SweepTable:
    """Rows of (parameters, measured, bound, quotient) plus metadata."""

    columns: tuple
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    passed: bool = True

    def quotients(self) -> np.ndarray:
        return np.array([r.quotient for r in self.rows])

    def sort(self) -> None:
        self.rows.sort(key=lambda r: r.params)


def stability_check(q, factor: float = STABILITY) -> bool:
    """max/min <= factor and max <= factor over a positive, finite quotient column."""
    q = np.asarray(q, dtype=float)
    if q.size == 0 or not np.all(np.isfinite(q)) or np.any(q <= 0):
        return False
    return bool(q.max() / q.min() <= factor and q.max() <= factor)


def _finish(table: SweepTable, factor: float = STABILITY, lo: float | None = None) -> SweepTable:
    table.sort()
    q = table.quotients()
    if lo is None:
        ok = stability_check(q, factor)
        for r in table.rows:
            r.passed = bool(np.isfinite(r.quotient) and 0 < r.quotient <= factor)
    else:
        for r in table.rows:
            r.passed = bool(lo <= r.quotient <= factor)
        ok = all(r.passed for r in table.rows)
    table.passed = ok
    return table


# ---------------------------------------------------------------- families

def random_smooth_field(grid: Grid, seed: int, support: float = 2.0, band: float | None = None,
                        pair: PartitionPair = DEFAULT_PAIR) -> np.ndarray:
    """Compactly supported field with Gaussian random block amplitudes.

    White noise is split into blocks up to ``band``; each block gets an
    independent N(0,1) amplitude, and the sum is multiplied by a smooth cutoff
    equal to 1 on B(0, support/2) and 0 outside B(0, support).
    """
    rng = np.random.default_rng(seed)
    w = rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)
    if band is None:
        band = grid.xi_nyquist / 2.0
    wh = fftn(w) * plateau(grid.xi_abs, 0.8 * band, band)
    bl = blocks_array(wh, grid, pair, spectral=True)
    amps = rng.normal(size=len(bl))
    out = sum(a * b / max(np.abs(b).max(), 1e-300) for a, b in zip(amps, bl))
    return out * cutoff_profile(grid.r, support / 2.0, support / 2.0)


def windowed_band_field(grid: Grid, seed: int, lo: float, hi: float, width: float | None = None) -> np.ndarray:
    """Noise with spectrum in a smooth annulus lo..hi times exp(-|x|^2 / width^2).

    The Gaussian window keeps the spectrum within a few 1/width of the
    annulus, so the field is band-limited to round-off well below Nyquist.
    The default width L/5 makes the window e^{-25} at the box faces.
    """
    if width is None:
        width = grid.L / 5.0
    rng = np.random.default_rng(seed)
    w = rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)
    w = ifftn(fftn(w) * plateau(grid.xi_abs, lo, hi))
    return w * np.exp(-grid.r ** 2 / width ** 2)


def shell_packet(grid: Grid, xi0, width: float = 1.5, center=None) -> np.ndarray:
    """Wave packet exp(i xi0.x) exp(-|x - c|^2 / width^2) with spectrum near xi0."""
    xi0 = np.asarray(xi0, dtype=float)
    c = np.zeros(grid.d) if center is None else np.asarray(center, dtype=float)
    ph = sum(xi0[a] * grid.x[a] for a in range(grid.d))
    r2 = sum((grid.x[a] - c[a]) ** 2 for a in range(grid.d))
    return np.exp(1j * ph) * np.exp(-r2 / width ** 2)


def shell_directions(params: FaddeevParams, d: int) -> list:
    """Frequencies on the singular set of m: |xi| = r_{k,gamma}, gamma.xi = 0."""
    g = params.gamma_vec(d)
    r = params.r
    if params.gamma_norm == 0:
        e = np.eye(d)
        return [r * e[0], r * (e[0] + e[1]) / math.sqrt(2.0)]
    # a unit vector orthogonal to gamma
    u = np.zeros(d)
    i = int(np.argmin(np.abs(g)))
    u[i] = 1.0
    u -= (u @ g) / (g @ g) * g
    u /= np.linalg.norm(u)
    return [r * u, -r * u]


def sample_family(grid: Grid, params: FaddeevParams, samples: int, seed: int, support: float = 2.0) -> list:
    """Random smooth fields plus near-shell packets for ``params``."""
    fam = [random_smooth_field(grid, seed * 1000 + i, support) for i in range(samples)]
    width = support / 2.0
    for xi0 in shell_directions(params, grid.d):
        fam.append(shell_packet(grid, xi0, width))
    return fam


def resonance_gap(grid: Grid, params: FaddeevParams) -> float:
    """min over the lattice of |m_{k,gamma,0}(xi)|, small when a lattice point sits on the shell."""
    return float(np.min(np.abs(symbol_m(grid.xi, params.with_tau(0.0)))))


# -------------------------------------------------------------- norm ratios

def _besov(a, grid, r, p, q, eta, sign, lam, pair=DEFAULT_PAIR) -> float:
    return combine_blocks(block_norms(a, grid, p, WeightSpec(eta, sign, lam), pair), r, q)


def _resolve(a: np.ndarray, grid: Grid, params: FaddeevParams, s: float = 0.0, sign: int = 1) -> np.ndarray:
    return outgoing_apply(a, grid, params.k, params.gamma, s=s, sign=sign)


def norm_ratio(f: SpectralField, params: FaddeevParams, r: float = 0.0, s: float = 0.0, eta: float = 1.0,
               lam: float = 1.0, sign: int = 1) -> float:
    """||H f||_{B^{r+s}_{2,2}(<x>^{-eta}, lam)} / ||f||_{B^r_{2,2}(<x>^{eta}, lam)}.

    The lifting (I - Delta)^{s/2} is folded into the limit symbol, so the
    output is measured in B^r of the lifted field, which is the H^{r+s} norm
    up to the fixed equivalence constants of the block partition.
    """
    if not eta > 0.5:
        raise ValueError("eta must exceed 1/2")
    if not 0.0 <= s <= 2.0:
        raise ValueError("s must lie in [0, 2]")
    grid = f.grid
    a = f.physical().values
    den = _besov(a, grid, r, 2, 2, eta, 1, lam)
    if den == 0:
        raise ValueError("f must be non-zero")
    u = _resolve(a, grid, params, s, sign)
    return _besov(u, grid, r, 2, 2, eta, -1, lam) / den


def thmF_bound(params: FaddeevParams, s: float, eta: float, lam: float) -> float:
    r = params.r
    return lam ** (-2.0 * eta) * (1.0 + r) ** s / (min(r, 1.0) * r)


def hsg_bound(params: FaddeevParams, eta: float, lam: float) -> float:
    r = params.r
    return lam ** (-eta) * max(r ** eta, r ** (-2.0))


def phlp_bound(params: FaddeevParams) -> float:
    r = params.r
    return max(r ** (-2.0), r ** (-1.0))


def _check_lists(k_list, gamma_list):
    if len(k_list) == 0:
        raise ValueError("k-list is empty")
    if len(gamma_list) == 0:
        raise ValueError("gamma-list is empty")
    if any(not k > 0 for k in k_list):
        raise ValueError("wavenumbers must be positive")


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def _calibrate(table: SweepTable, k_ref: float = 1.0) -> None:
    """C = mean of measured/bound over rows with k = k_ref; quotient = measured/(C bound)."""
    ref = [r.measured / r.bound for r in table.rows if r.params[0] == k_ref]
    if not ref:
        ref = [r.measured / r.bound for r in table.rows]
    C = float(np.exp(np.mean(np.log(ref))))
    table.meta["C"] = C
    for r in table.rows:
        r.quotient = r.measured / (C * r.bound)


def sweep_thmF(grid: Grid, k_list, gamma_list, r: float = 0.0, s=0.0, eta: float = 1.0, lam=1.0,
               samples: int = 4, seed: int = 0, support: float = 2.0, factor: float = STABILITY) -> SweepTable:
    """Family maxima of :func:`norm_ratio` against lam^{-2 eta}(1+r)^s / (min(r,1) r).

    ``s`` and ``lam`` may be lists; the constant is calibrated at k = 1.
    Columns: k, |gamma|, s, lambda, measured, bound, quotient, pass.
    """
    _check_lists(k_list, gamma_list)
    if not eta > 0.5:
        raise ValueError("eta must exceed 1/2")
    table = SweepTable(("k", "gamma", "s", "lambda", "measured", "bound", "quotient", "pass"),
                       meta={"grid": grid, "seed": seed, "samples": samples})
    for k in k_list:
        for gam in gamma_list:
            params = FaddeevParams(k, tuple(gam))
            fam = sample_family(grid, params, samples, seed, support)
            for s_ in _as_list(s):
                outs = [_resolve(a, grid, params, s_) for a in fam]
                for lm in _as_list(lam):
                    best = 0.0
                    for a, u in zip(fam, outs):
                        num = _besov(u, grid, r, 2, 2, eta, -1, lm)
                        den = _besov(a, grid, r, 2, 2, eta, 1, lm)
                        best = max(best, num / den)
                    table.rows.append(SweepRow((k, params.gamma_norm, s_, lm), best,
                                               thmF_bound(params, s_, eta, lm)))
    _calibrate(table)
    return _finish(table, factor)


def hsg_exponents_ok(d: int, p1: float, p2: float, alpha: float, eta: float) -> None:
    if not 0.0 <= alpha < d / 2.0:
        raise ValueError("alpha must lie in [0, d/2)")
    if abs((1.0 / p2 - 1.0 / p1) - alpha / d) > 1e-12:
        raise ValueError("exponents violate 1/p2 - 1/p1 = alpha/d")
    if not eta > (d + 1) / 2.0 - alpha:
        raise ValueError("eta must exceed (d+1)/2 - alpha")


def sweep_Hsg(grid: Grid, k_list, gamma_list, p1: float = 4.0, p2: float = 2.0, q: float = 2.0,
              r: float = 0.5, eta: float = 1.1, lam=1.0, samples: int = 4, seed: int = 0,
              support: float = 2.0, factor: float = STABILITY) -> SweepTable:
    """||H f||_{B^r_{p1,q}(<x>^{-eta},lam)} / ||f||_{B^{r-2+alpha}_{p2,q}(<x>^{eta},lam)}
    against lam^{-eta} max(r^eta, r^{-2}), with alpha = d (1/p2 - 1/p1)."""
    _check_lists(k_list, gamma_list)
    alpha = grid.d * (1.0 / p2 - 1.0 / p1)
    hsg_exponents_ok(grid.d, p1, p2, alpha, eta)
    table = SweepTable(("k", "gamma", "lambda", "measured", "bound", "quotient", "pass"),
                       meta={"grid": grid, "seed": seed, "samples": samples, "alpha": alpha})
    for k in k_list:
        for gam in gamma_list:
            params = FaddeevParams(k, tuple(gam))
            fam = sample_family(grid, params, samples, seed, support)
            outs = [_resolve(a, grid, params) for a in fam]
            for lm in _as_list(lam):
                best = 0.0
                for a, u in zip(fam, outs):
                    num = _besov(u, grid, r, p1, q, eta, -1, lm)
                    den = _besov(a, grid, r - 2.0 + alpha, p2, q, eta, 1, lm)
                    best = max(best, num / den)
                table.rows.append(SweepRow((k, params.gamma_norm, lm), best, hsg_bound(params, eta, lm)))
    _calibrate(table)
    return _finish(table, factor)


def sweep_PHLp(grid: Grid, k_list, gamma_list, p0: float = 1.5, eta: float = 1.0, eps: float = 0.1,
               samples: int = 4, seed: int = 0, support: float = 2.0, factor: float = STABILITY) -> SweepTable:
    """||H f||_{L^{p0}(<x>^{-eta})} / ||f||_{L^2(<x>^{1/2+eps})} against max(r^{-2}, r^{-1})."""
    _check_lists(k_list, gamma_list)
    d = grid.d
    if not 1.0 <= p0 <= 2.0:
        raise ValueError("p0 must lie in [1, 2]")
    if not eta > d / p0 - (d - 1) / 2.0:
        raise ValueError("eta must exceed d/p0 - (d-1)/2")
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    w_out = WeightSpec(eta, -1)(*grid.x)
    w_in = WeightSpec(0.5 + eps, 1)(*grid.x)
    table = SweepTable(("k", "gamma", "measured", "bound", "quotient", "pass"),
                       meta={"grid": grid, "seed": seed, "samples": samples})
    for k in k_list:
        for gam in gamma_list:
            params = FaddeevParams(k, tuple(gam))
            best = 0.0
            for a in sample_family(grid, params, samples, seed, support):
                u = _resolve(a, grid, params)
                best = max(best, lp_norm_array(u, p0, grid.cell, w_out) / lp_norm_array(a, 2, grid.cell, w_in))
            table.rows.append(SweepRow((k, params.gamma_norm), best, phlp_bound(params)))
    _calibrate(table)
    return _finish(table, factor)


# ----------------------------------------------------------------- scaling

def scaling_envelope(lam: float, r: float, p: float, eta: float, d: int) -> float:
    return lam ** (-d / p) * max(lam ** r, lam ** eta, 1.0)


def scaling_sweep(f: SpectralField, lam_list, r: float = 0.5, p: float = 2.0, q: float = 2.0,
                  eta: float = 1.0, sign: int = 1, factor: float = STABILITY,
                  pair: PartitionPair = DEFAULT_PAIR) -> SweepTable:
    """||(f)_lam||_{B^r_{p,q}(rho, lam)} against lam^{-d/p} max(lam^r, lam^eta, 1) ||f||_{B^r_{p,q}(rho)}.

    The dilate (f)_lam(x) = f(lam x) is represented exactly by reusing the
    samples of f on the grid of half length L / lam; rho = <x>^{sign eta}.
    The quotient must lie in [1/factor, factor].
    """
    grid = f.grid
    a = f.physical().values
    base = _besov(a, grid, r, p, q, eta, sign, 1.0, pair)
    if base == 0:
        raise ValueError("f must be non-zero")
    table = SweepTable(("lambda", "measured", "bound", "quotient", "pass"),
                       meta={"grid": grid, "r": r, "p": p, "q": q, "eta": eta})
    for lam in lam_list:
        if not lam > 0:
            raise ValueError("lambda must be positive")
        g2 = grid.scaled(1.0 / lam)
        m = _besov(a, g2, r, p, q, eta, sign, lam, pair)
        env = scaling_envelope(lam, r, p, eta, grid.d)
        table.rows.append(SweepRow((lam,), m, env * base, m / (env * base)))
    return _finish(table, factor, lo=1.0 / factor)


def block_shift_error(f: SpectralField, m: int, p: float = 2.0, eta: float = 1.0, sign: int = 1,
                      pair: PartitionPair = DEFAULT_PAIR) -> float:
    """Largest relative deviation from ||Delta_{n+m}(f)_lam||_{L^p(rho,lam)} = lam^{-d/p} ||Delta_n f||_{L^p(rho)}
    with lam = 2^m, over the blocks n >= 0 with n + m >= 0 that carry energy."""
    grid = f.grid
    a = f.physical().values
    lam = 2.0 ** m
    b0 = block_norms(a, grid, p, WeightSpec(eta, sign, 1.0), pair)
    b1 = block_norms(a, grid.scaled(1.0 / lam), p, WeightSpec(eta, sign, lam), pair)
    top = b0.max()
    err = 0.0
    for n in range(0, len(b0)):
        j = n + m
        if j < 0 or j + 1 >= len(b1) or b0[n + 1] < 1e-12 * top:
            continue
        expect = lam ** (-grid.d / p) * b0[n + 1]
        err = max(err, abs(b1[j + 1] - expect) / expect)
    return err


def single_shell_field(grid: Grid, j: int, seed: int = 0, pair: PartitionPair = DEFAULT_PAIR) -> np.ndarray:
    """White noise restricted to 1.4 2^j <= |xi| <= 1.6 2^j, where phi_j = 1 and every other block vanishes."""
    rng = np.random.default_rng(seed)
    w = rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)
    rho = grid.xi_abs / 2.0 ** j
    return ifftn(fftn(w) * ((rho >= 1.4) & (rho <= 1.6)))


# --------------------------------------------------------- paraproduct sweep

@dataclass(frozen=True)
class PC1Case:
    """Exponents for one paraproduct estimate; ``kind`` is 'para_pos', 'para_neg' or 'resonant'."""

    kind: str
    alpha: float
    beta: float
    p1: float = 4.0
    p2: float = 4.0
    q1: float = 4.0
    q2: float = 4.0
    eta: float = 1.0

    def __post_init__(self):
        if self.kind not in ("para_pos", "para_neg", "resonant"):
            raise ValueError(f"unknown case {self.kind!r}")
        if self.kind == "para_pos" and not self.alpha > 0:
            raise ValueError("the f < g estimate into B^beta needs alpha > 0")
        if self.kind == "para_neg" and not self.alpha < 0:
            raise ValueError("the f < g estimate into B^{alpha+beta} needs alpha < 0")
        if self.kind == "resonant" and not self.alpha + self.beta > 0:
            raise ValueError("the resonant estimate needs alpha + beta > 0")

    @property
    def p(self) -> float:
        return 1.0 / (1.0 / self.p1 + 1.0 / self.p2)

    @property
    def q(self) -> float:
        if self.kind == "para_pos":
            return self.q2
        return 1.0 / (1.0 / self.q1 + 1.0 / self.q2)

    @property
    def target(self) -> float:
        return self.beta if self.kind == "para_pos" else self.alpha + self.beta

    @property
    def qf(self) -> float:
        return math.inf if self.kind == "para_pos" else self.q1


DEFAULT_PC1 = (PC1Case("para_pos", 0.5, -0.5), PC1Case("para_neg", -0.5, 1.0), PC1Case("resonant", 0.6, 0.6))


def paraproduct_sweep(grid: Grid, case: PC1Case, lam_list, samples: int = 4, seed: int = 0,
                      support: float | None = None, factor: float = STABILITY,
                      pair: PartitionPair = DEFAULT_PAIR) -> SweepTable:
    """Family maxima of the paraproduct norm quotient across lambda.

    Weights are rho1 = <x>^{eta}, rho2 = <x>^{-eta/2}, both of type W(eta),
    so the product weight is <x>^{eta/2}.  Families are rough fields with
    block amplitudes 2^{-n alpha} and 2^{-n beta}.
    """
    if support is None:
        support = grid.L / 2.0
    fam = []
    for i in range(samples):
        f = synth_rough_field(grid, case.alpha, seed * 1000 + 2 * i, support, pair=pair)
        g = synth_rough_field(grid, case.beta, seed * 1000 + 2 * i + 1, support, pair=pair)
        fb = blocks_array(f, grid, pair)
        gb = blocks_array(g, grid, pair)
        if case.kind == "resonant":
            out = resonant_arrays(fb, gb)
        else:
            out = paraproduct_arrays(fb, gb)
        fam.append((f, g, out))
    eta = case.eta
    table = SweepTable(("lambda", "measured", "bound", "quotient", "pass"),
                       meta={"grid": grid, "seed": seed, "samples": samples, "case": case.kind})
    for lam in lam_list:
        if not lam > 0:
            raise ValueError("lambda must be positive")
        best = 0.0
        for f, g, out in fam:
            num = _besov(out, grid, case.target, case.p, case.q, eta / 2.0, 1, lam, pair)
            nf = _besov(f, grid, case.alpha, case.p1, case.qf, eta, 1, lam, pair)
            ng = _besov(g, grid, case.beta, case.p2, case.q2, eta / 2.0, -1, lam, pair)
            best = max(best, num / (nf * ng))
        env = max(lam ** eta, 1.0)
        table.rows.append(SweepRow((lam,), best, env, best / env))
    return _finish(table, factor)
