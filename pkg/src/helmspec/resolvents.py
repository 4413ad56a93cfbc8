"""Regularized Faddeev-type resolvents and the limiting absorption limit.

Conventions
-----------
The symbol is m(xi) = |xi|^2 - k^2 - |gamma|^2 + 2i gamma.xi - i tau, so the
multiplier 1/m inverts -(Delta + k^2 + |gamma|^2 - 2 gamma.grad + i tau).
For gamma = 0 and tau -> 0+ this gives H^+ = -(Delta + k^2 + i0)^{-1}, which
is convolution with the outgoing kernel G_k (e^{ik|x|}/(4 pi |x|) in 3D).

Two discretizations are offered:

``domain="periodic"``
    the plain lattice multiplier.  It is an exact two-sided inverse on the
    periodic box and is the only option when gamma != 0.
``domain="free"``
    (gamma = 0 only) convolution with the free-space kernel of complex
    wavenumber kappa = sqrt(k^2 + i tau), truncated at radius R_t.  Its
    Fourier transform is known in closed form, so applying it on the lattice
    reproduces free-space convolution exactly for source/target pairs closer
    than R_t, without periodic wrap-around.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .grid import Grid, SpectralField, WeightSpec, fftn, ifftn, lp_norm_array
from .littlewood_paley import plateau


# ---------------------------------------------------------------- parameters

@dataclass(frozen=True)
class FaddeevParams:
    """Wavenumber k > 0, drift gamma in R^d and regularization tau."""

    k: float
    gamma: tuple = ()
    tau: float = 0.0

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError("k must be positive")
        object.__setattr__(self, "gamma", tuple(float(c) for c in self.gamma))
        object.__setattr__(self, "k", float(self.k))
        object.__setattr__(self, "tau", float(self.tau))

    @property
    def gamma_norm(self) -> float:
        return math.sqrt(sum(c * c for c in self.gamma))

    @property
    def r(self) -> float:
        """r_{k,gamma} = (k^2 + |gamma|^2)^{1/2}."""
        return math.sqrt(self.k ** 2 + self.gamma_norm ** 2)

    def gamma_vec(self, d: int) -> np.ndarray:
        g = np.zeros(d)
        g[: len(self.gamma)] = self.gamma[:d]
        if len(self.gamma) > d and any(self.gamma[d:]):
            raise ValueError("gamma has more components than the dimension")
        return g

    def with_tau(self, tau: float) -> "FaddeevParams":
        return FaddeevParams(self.k, self.gamma, tau)


def default_eps0(r: float) -> float:
    """Centre of the admissible shell half-width window (0, min(r/4, 1))."""
    return min(r / 4.0, 1.0) / 2.0


def default_tau(eps0: float) -> float:
    return eps0 ** 2 / 2.0


def psi_profile(t) -> np.ndarray:
    """Shell profile: 1 on [0, 1/2], 0 for t >= 1."""
    return plateau(np.abs(np.asarray(t, dtype=float)), 0.5, 1.0)


@dataclass(frozen=True)
class ShellCutoff:
    """psi(|rho - r0| / eps0)."""

    r0: float
    eps0: float

    def __call__(self, rho) -> np.ndarray:
        return psi_profile((np.asarray(rho, dtype=float) - self.r0) / self.eps0)


def symbol_m(xi, params: FaddeevParams) -> np.ndarray:
    """m_{k,gamma,tau}(xi); ``xi`` is a tuple of coordinate arrays or an array (..., d)."""
    if isinstance(xi, tuple):
        comps = xi
    else:
        xi = np.asarray(xi, dtype=float)
        comps = tuple(xi[..., a] for a in range(xi.shape[-1]))
    d = len(comps)
    g = params.gamma_vec(d)
    xi2 = sum(c * c for c in comps)
    gx = sum(g[a] * comps[a] for a in range(d))
    return xi2 - params.k ** 2 - float(g @ g) + 2j * gx - 1j * params.tau


# ------------------------------------------------------- truncated kernels

def outgoing_kappa(k: float, tau: float) -> complex:
    """Root of kappa^2 = k^2 + i tau with Im kappa >= 0 (Re kappa > 0 when tau = 0+)."""
    kap = np.sqrt(complex(k * k, tau))
    if kap.imag < 0 or (kap.imag == 0 and tau < 0):
        kap = -kap
    return complex(kap)


def truncated_kernel_symbol(rho: np.ndarray, kappa: complex, R: float, d: int) -> np.ndarray:
    """Fourier transform of G_kappa(x) 1_{|x| < R} as a function of rho = |xi|.

    G_kappa is e^{i kappa r}/(4 pi r) in 3D and (i/4) H_0^(1)(kappa r) in 2D;
    as R -> infinity (Im kappa > 0) this tends to 1/(rho^2 - kappa^2).
    """
    rho = np.asarray(rho, dtype=float)
    den = rho * rho - kappa * kappa
    if d == 3:
        sin_over = R * np.sinc(rho * R / np.pi)
        num = 1.0 + np.exp(1j * kappa * R) * (1j * kappa * sin_over - np.cos(rho * R))
    elif d == 2:
        kr = kappa * R
        num = 1.0 + 0.5j * np.pi * R * (rho * special.j1(rho * R) * special.hankel1(0, kr)
                                         - kappa * special.j0(rho * R) * special.hankel1(1, kr))
    else:
        raise ValueError("dimension must be 2 or 3")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num / den
    bad = ~np.isfinite(out) | (np.abs(den) < 1e-10 * max(1.0, abs(kappa) ** 2))
    if np.any(bad):
        # removable singularity on the real shell: evaluate by a symmetric difference
        rb = rho[bad]
        dr = 1e-5 * max(abs(kappa), 1.0)
        out[bad] = 0.5 * (truncated_kernel_symbol(rb + dr, kappa, R, d)
                          + truncated_kernel_symbol(np.abs(rb - dr), kappa, R, d))
    return out


def green_kernel(r, k: complex, d: int) -> np.ndarray:
    """Outgoing free-space kernel G_k(r): (i/4) H_0^(1)(k r) or e^{ikr}/(4 pi r)."""
    r = np.asarray(r, dtype=float)
    if d == 3:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.exp(1j * k * r) / (4.0 * np.pi * r)
    if d == 2:
        return 0.25j * special.hankel1(0, k * r)
    raise ValueError("dimension must be 2 or 3")


def green_kernel_general(r, k: float, d: int) -> np.ndarray:
    """(i/4) (k / (2 pi r))^{d/2-1} H^(1)_{d/2-1}(k r), the general-dimension form."""
    r = np.asarray(r, dtype=float)
    nu = d / 2.0 - 1.0
    return 0.25j * (k / (2.0 * np.pi * r)) ** nu * special.hankel1(nu, k * r)


# ---------------------------------------------------------- regularized ops

def _padded(grid: Grid, pad: int) -> Grid:
    return grid if pad == 1 else Grid(grid.d, grid.N * pad, grid.L * pad)


def _pad_array(a: np.ndarray, grid: Grid, pad: int) -> np.ndarray:
    if pad == 1:
        return a
    N = grid.N
    off = (pad * N - N) // 2
    out = np.zeros((pad * N,) * grid.d, dtype=complex)
    out[(slice(off, off + N),) * grid.d] = a
    return out


def _crop_array(a: np.ndarray, grid: Grid, pad: int) -> np.ndarray:
    if pad == 1:
        return a
    N = grid.N
    off = (pad * N - N) // 2
    return a[(slice(off, off + N),) * grid.d]


def periodic_symbol(grid: Grid, params: FaddeevParams, s: float = 0.0) -> np.ndarray:
    """(1+|xi|^2)^{s/2} / m on the lattice; Nyquist modes zeroed when gamma != 0."""
    if params.tau == 0:
        raise ValueError("tau = 0 is singular on the lattice; use limiting_apply")
    m = symbol_m(grid.xi, params)
    if np.min(np.abs(m)) < 1e-300:
        raise ValueError("symbol underflow")
    out = (1.0 + grid.xi_abs ** 2) ** (0.5 * s) / m
    if params.gamma_norm > 0:
        out = np.where(grid.nyquist_mask, 0.0, out)
    return out


def free_symbol(grid: Grid, params: FaddeevParams, s: float = 0.0, pad: int = 2,
                R_t: float | None = None) -> np.ndarray:
    """Truncated-kernel symbol on the (possibly padded) lattice, gamma = 0 only.

    The kernel is cut at R_t (default pad * L) and the lattice has period
    2 pad L, so periodic images never overlap the kernel for pairs with
    |x - y| < pad L.  With pad = 2 this covers every pair in the ball |x| < L.
    """
    if params.gamma_norm > 0:
        raise ValueError("the free-space discretization requires gamma = 0")
    pg = _padded(grid, pad)
    if R_t is None:
        R_t = pad * grid.L
    kap = outgoing_kappa(params.k, params.tau)
    return (1.0 + pg.xi_abs ** 2) ** (0.5 * s) * truncated_kernel_symbol(pg.xi_abs, kap, R_t, grid.d)


def apply_symbol_array(a: np.ndarray, grid: Grid, sym: np.ndarray, pad: int = 2) -> np.ndarray:
    ap = _pad_array(a, grid, pad)
    return _crop_array(ifftn(sym * fftn(ap)), grid, pad)


def regularized_apply(f: SpectralField, params: FaddeevParams, s: float = 0.0,
                      domain: str = "periodic", pad: int = 2, R_t: float | None = None) -> SpectralField:
    """(I - Delta)^{s/2} H_{k,gamma,tau} f.

    Parameters
    ----------
    f : SpectralField
    params : FaddeevParams
        tau must be non-zero.
    s : float
        Lifting order in [0, 2].
    domain : {"periodic", "free"}
        Lattice multiplier or truncated free-space kernel (gamma = 0).
    """
    if params.tau == 0:
        raise ValueError("tau = 0 is singular; use limiting_apply")
    if not (0.0 <= s <= 2.0):
        raise ValueError("s must lie in [0, 2]")
    grid = f.grid
    if domain == "periodic":
        return SpectralField(grid, ifftn(periodic_symbol(grid, params, s) * f.spectral().values))
    if domain == "free":
        sym = free_symbol(grid, params, s, pad, R_t)
        return SpectralField(grid, apply_symbol_array(f.physical().values, grid, sym, pad))
    raise ValueError(f"unknown domain {domain!r}")


def faddeev_operator_apply(u: SpectralField, params: FaddeevParams) -> SpectralField:
    """-(Delta + k^2 + |gamma|^2 - 2 gamma.grad + i tau) u, with derivatives taken
    term by term spectrally (independent of the symbol routine)."""
    grid = u.grid
    uh = u.spectral().values
    g = params.gamma_vec(grid.d)
    lap = np.zeros(grid.shape, dtype=complex)
    drift = np.zeros(grid.shape, dtype=complex)
    for a in range(grid.d):
        ik = 1j * grid.xi[a]
        if g[a] != 0:
            ik_odd = np.where(grid.nyquist_mask, 0.0, ik)
            drift += g[a] * ifftn(ik_odd * uh)
        lap += ifftn(ik * ik * uh)
    uu = ifftn(uh)
    out = lap + (params.k ** 2 + float(g @ g) + 1j * params.tau) * uu - 2.0 * drift
    return SpectralField(grid, -out)


def inverse_residual(f: SpectralField, params: FaddeevParams) -> tuple:
    """Relative residuals of P(H f) - f and H(P f) - f, P the differential operator."""
    f = f.physical()
    nf = np.linalg.norm(f.values)
    a = faddeev_operator_apply(regularized_apply(f, params), params)
    b = regularized_apply(faddeev_operator_apply(f, params), params)
    return (float(np.linalg.norm(a.values - f.values) / nf),
            float(np.linalg.norm(b.values - f.values) / nf))


# ----------------------------------------------------- limiting absorption

def default_schedule(params: FaddeevParams, n: int = 8, sign: int = 1) -> tuple:
    eps0 = default_eps0(params.r)
    return tuple(sign * eps0 ** 2 * 2.0 ** (-j) for j in range(1, n + 1))


def richardson_weights(taus, order: int) -> tuple:
    """Lagrange weights extrapolating the last order+1 samples to tau = 0."""
    t = np.asarray(taus, dtype=float)[-(order + 1):]
    w = np.ones(len(t))
    for i in range(len(t)):
        for j in range(len(t)):
            if i != j:
                w[i] *= (0.0 - t[j]) / (t[i] - t[j])
    return tuple(w)


def _auto_domain(params: FaddeevParams, domain: str | None) -> str:
    if domain is None:
        return "free" if params.gamma_norm == 0 else "periodic"
    return domain


@lru_cache(maxsize=64)
def _limit_symbol_cached(grid: Grid, k: float, gamma: tuple, s: float, taus: tuple,
                         order: int, domain: str, pad: int, R_t) -> np.ndarray:
    w = richardson_weights(taus, order)
    ts = taus[-(order + 1):]
    acc = None
    for wi, t in zip(w, ts):
        p = FaddeevParams(k, gamma, t)
        sym = periodic_symbol(grid, p, s) if domain == "periodic" else free_symbol(grid, p, s, pad, R_t)
        acc = wi * sym if acc is None else acc + wi * sym
    acc.setflags(write=False)
    return acc


def limit_symbol(grid: Grid, k: float, gamma=(), sign: int = 1, s: float = 0.0, schedule=None,
                 order: int = 3, domain: str | None = None, pad: int = 2, R_t=None) -> np.ndarray:
    """Extrapolated symbol of (I - Delta)^{s/2} H^{+-}_{k,gamma}."""
    p = FaddeevParams(k, gamma)
    domain = _auto_domain(p, domain)
    taus = tuple(schedule) if schedule is not None else default_schedule(p, sign=sign)
    _check_schedule(taus, sign)
    return _limit_symbol_cached(grid, p.k, p.gamma, float(s), taus, int(order), domain, int(pad), R_t)


def _check_schedule(taus, sign):
    t = np.asarray(taus, dtype=float)
    if len(t) < 2:
        raise ValueError("schedule needs at least two values")
    if np.any(np.sign(t) != sign):
        raise ValueError("schedule sign does not match the requested limit")
    if np.any(np.diff(np.abs(t)) >= 0):
        raise ValueError("schedule must decrease in |tau|")


@dataclass
class LimitResult:
    field: SpectralField
    taus: tuple
    increments: np.ndarray
    error_estimate: float
    monotone: bool
    fields: list = field(default_factory=list, repr=False)


def limiting_apply(f: SpectralField, k: float, gamma=(), sign: int = 1, schedule=None, s: float = 0.0,
                   order: int = 3, domain: str | None = None, pad: int = 2, R_t=None,
                   eta: float = 1.0, keep_fields: bool = False) -> LimitResult:
    """H^{+-}_{k,gamma} f by Richardson extrapolation along a tau schedule.

    The default schedule is tau_n = sign * eps0^2 2^{-n}, n = 1..8.  Cauchy
    increments ||H_{tau_n} f - H_{tau_{n+1}} f|| are measured in the weighted
    L^2(<x>^{-eta}) norm; ``monotone`` is False when they fail to decrease.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    p = FaddeevParams(k, gamma)
    domain = _auto_domain(p, domain)
    taus = tuple(schedule) if schedule is not None else default_schedule(p, sign=sign)
    _check_schedule(taus, sign)
    grid = f.grid
    a = f.physical().values
    wt = WeightSpec(eta, -1)(*grid.x)
    fields = []
    if domain == "periodic":
        fh = fftn(a)
        for t in taus:
            fields.append(ifftn(periodic_symbol(grid, p.with_tau(t), s) * fh))
    else:
        ap = fftn(_pad_array(a, grid, pad))
        for t in taus:
            sym = free_symbol(grid, p.with_tau(t), s, pad, R_t)
            fields.append(_crop_array(ifftn(sym * ap), grid, pad))
    inc = np.array([lp_norm_array(fields[i + 1] - fields[i], 2, grid.cell, wt) for i in range(len(fields) - 1)])
    w = richardson_weights(taus, order)
    out = sum(wi * fi for wi, fi in zip(w, fields[-(order + 1):]))
    mono = bool(np.all(np.diff(inc) < 0)) if inc.size > 1 else True
    return LimitResult(SpectralField(grid, out), taus, inc, float(inc[-1]), mono,
                       fields if keep_fields else [])


def outgoing_apply(a: np.ndarray, grid: Grid, k: float, gamma=(), s: float = 0.0, sign: int = 1,
                   domain: str | None = None, pad: int = 2, R_t=None, order: int = 3) -> np.ndarray:
    """Array version of the extrapolated H^{+-} using the cached symbol."""
    p = FaddeevParams(k, gamma)
    dom = _auto_domain(p, domain)
    sym = limit_symbol(grid, k, gamma, sign, s, None, order, dom, pad if dom == "free" else 1, R_t)
    if dom == "periodic":
        return ifftn(sym * fftn(a))
    return apply_symbol_array(a, grid, sym, pad)


# -------------------------------------------------------- Green quadrature

def _cell_average_weight(k: float, h: float, d: int) -> complex:
    """Integral of G_k over the cell [-h/2, h/2]^d centred at the singularity."""
    a = h / 2.0
    nodes, wts = np.polynomial.legendre.leggauss(48)
    if d == 3:
        # cube = 6 pyramids; y = x u, z = x v, r = x s, s = sqrt(1+u^2+v^2)
        U, Vv = np.meshgrid(nodes, nodes, indexing="ij")
        W = np.outer(wts, wts)
        s = np.sqrt(1.0 + U ** 2 + Vv ** 2)
        c = k * s
        # int_0^a x e^{icx} dx
        with np.errstate(invalid="ignore", divide="ignore"):
            inner = np.where(np.abs(c * a) < 1e-8, a * a / 2.0,
                             (np.exp(1j * c * a) * (1.0 - 1j * c * a) - 1.0) / (c * c))
        return complex(6.0 * np.sum(W * inner / (4.0 * np.pi * s)))
    if d == 2:
        total = 0.0 + 0.0j
        for u, wu in zip(nodes, wts):
            s = math.sqrt(1.0 + u * u)
            re = integrate.quad(lambda x: (-0.25 * special.y0(k * s * x)) * x, 0.0, a, limit=200)[0]
            im = integrate.quad(lambda x: (0.25 * special.j0(k * s * x)) * x, 0.0, a, limit=200)[0]
            total += wu * (re + 1j * im)
        return complex(4.0 * total)
    raise ValueError("dimension must be 2 or 3")


def _gaussian_moment(k: float, sigma: float, d: int, power: int = 0) -> complex:
    """Integral of G_k(x) |x|^power exp(-|x|^2/sigma^2) over R^d."""
    top = 9.0 * sigma
    if d == 3:
        fr = lambda r: r ** (1 + power) * math.cos(k * r) * math.exp(-(r / sigma) ** 2)
        fi = lambda r: r ** (1 + power) * math.sin(k * r) * math.exp(-(r / sigma) ** 2)
    else:
        fr = lambda r: -0.25 * special.y0(k * r) * 2.0 * np.pi * r ** (1 + power) * math.exp(-(r / sigma) ** 2)
        fi = lambda r: 0.25 * special.j0(k * r) * 2.0 * np.pi * r ** (1 + power) * math.exp(-(r / sigma) ** 2)
    re = integrate.quad(fr, 0.0, top, limit=400, epsabs=1e-15, epsrel=1e-13)[0]
    im = integrate.quad(fi, 0.0, top, limit=400, epsabs=1e-15, epsrel=1e-13)[0]
    return complex(re + 1j * im)


def _offset_mesh(grid: Grid):
    N, h, d = grid.N, grid.h, grid.d
    off = np.fft.fftfreq(2 * N, d=1.0 / (2 * N)) * h
    return np.meshgrid(*([off] * d), indexing="ij", sparse=True)


def _offset_kernel(grid: Grid, k: float) -> np.ndarray:
    """G_k sampled at all offsets (-N..N-1) h in FFT order, zero at the origin."""
    mesh = _offset_mesh(grid)
    r = np.sqrt(sum(m * m for m in mesh))
    with np.errstate(divide="ignore", invalid="ignore"):
        G = green_kernel(r, k, grid.d)
    G[(0,) * grid.d] = 0.0
    return G


def _subtraction_weights(grid: Grid, k: float, sigma: float) -> tuple:
    """Lattice-sum defects of G b z^alpha for b = exp(-|z|^2/sigma^2).

    Returns (w0, w2, w4a, w4b) for the monomials 1, z_1^2, z_1^4 and z_1^2 z_2^2;
    odd monomials have zero defect by symmetry.
    """
    d = grid.d
    G = _offset_kernel(grid, k)
    mesh = _offset_mesh(grid)
    z2 = sum(m * m for m in mesh)
    b = np.exp(-z2 / sigma ** 2)
    Gb = G * b * grid.cell
    m0 = _gaussian_moment(k, sigma, d, 0)
    m2 = _gaussian_moment(k, sigma, d, 2)
    m4 = _gaussian_moment(k, sigma, d, 4)
    # sphere averages: <w1^2> = 1/d, <w1^4> = 3/(d(d+2)), <w1^2 w2^2> = 1/(d(d+2))
    w0 = m0 - np.sum(Gb)
    w2 = m2 / d - np.sum(Gb * mesh[0] ** 2)
    w4a = 3.0 * m4 / (d * (d + 2)) - np.sum(Gb * mesh[0] ** 4)
    w4b = m4 / (d * (d + 2)) - np.sum(Gb * mesh[0] ** 2 * mesh[1] ** 2)
    return complex(w0), complex(w2), complex(w4a), complex(w4b)


def _taylor_correction(a: np.ndarray, grid: Grid, w: tuple, order: int, sigma: float) -> np.ndarray:
    """Correction sum_alpha c_alpha(x) D[z^alpha] where c_alpha are the even Taylor
    coefficients of z -> g(x + z) exp(|z|^2/sigma^2), so that g - b T = O(|z|^{order+1})."""
    w0, w2, w4a, w4b = w
    d = grid.d
    out = w0 * a
    if order < 2:
        return out
    ah = fftn(a)
    xi2 = [c ** 2 for c in grid.xi]
    lap = ifftn(-sum(xi2) * ah)
    s2 = 1.0 / sigma ** 2
    # z_i^2 coefficients: d_i^2 g / 2 + g / sigma^2
    out = out + w2 * (0.5 * lap + d * s2 * a)
    if order < 4:
        return out
    quart = ifftn(sum(x * x for x in xi2) * ah)
    mixed = ifftn(sum(xi2[i] * xi2[j] for i in range(d) for j in range(i + 1, d)) * ah)
    # (1/24) d^4 g terms, (1/sigma^2)(1/2) d_i^2 g |z|^2 z_i^2 and g |z|^4 / (2 sigma^4)
    out = out + (w4a * quart + 6.0 * w4b * mixed) / 24.0
    out = out + 0.5 * s2 * lap * (w4a + (d - 1) * w4b)
    out = out + 0.5 * s2 * s2 * a * (d * w4a + d * (d - 1) * w4b)
    return out


_ORDERS = {"subtract": 0, "subtract2": 2, "subtract4": 4}


def diagonal_weight(grid: Grid, k: float, method: str = "subtract", sigma: float | None = None) -> complex:
    """Weight multiplying g(x) that replaces the singular self-term.

    ``"cell"`` integrates G_k exactly over the cell around the singularity.
    ``"subtract"`` uses a Gaussian b: w = int G b - sum_{z != 0} G(z) b(z) h^d,
    which is exact for g = b and removes the leading quadrature error.
    """
    h, d = grid.h, grid.d
    if method == "cell":
        return _cell_average_weight(k, h, d)
    if method not in _ORDERS:
        raise ValueError(f"unknown diagonal method {method!r}")
    if sigma is None:
        sigma = min(1.0, grid.L / 6.0)
    return _subtraction_weights(grid, k, sigma)[0]


def green_convolve(g: SpectralField, k: float, method: str = "subtract4", sigma: float | None = None) -> SpectralField:
    """Free-space convolution u = G_k * g by lattice quadrature.

    u(x) = sum_{y != x} G_k(x - y) g(y) h^d + local correction at x.  The
    discrete sum is evaluated exactly with a zero-padded FFT (no periodic
    wrap-around).  The correction comes from Gaussian subtraction: the even
    Taylor terms of g about x, times a Gaussian, are summed on the lattice and
    integrated exactly, and the defects are added back.  ``"subtract"`` keeps
    only the value of g, ``"subtract2"`` adds the second-order terms and
    ``"subtract4"`` (default) the fourth-order ones.  ``"cell"`` uses the
    exact cell average of G instead, which is only O(h^2) accurate.
    """
    grid = g.grid
    if grid.d not in (2, 3):
        raise ValueError("dimension must be 2 or 3")
    a = g.physical().values
    N, d = grid.N, grid.d
    G = _offset_kernel(grid, k)
    pad = np.zeros((2 * N,) * d, dtype=complex)
    pad[(slice(0, N),) * d] = a
    conv = np.fft.ifftn(np.fft.fftn(pad) * np.fft.fftn(G))[(slice(0, N),) * d] * grid.cell
    if method == "cell":
        return SpectralField(grid, conv + _cell_average_weight(k, grid.h, d) * a)
    if method not in _ORDERS:
        raise ValueError(f"unknown diagonal method {method!r}")
    if sigma is None:
        sigma = min(1.0, grid.L / 6.0)
    w = _subtraction_weights(grid, k, sigma)
    return SpectralField(grid, conv + _taylor_correction(a, grid, w, _ORDERS[method], sigma))


def green_point_values(g: SpectralField, k: float, points, method: str = "subtract4",
                       sigma: float | None = None) -> np.ndarray:
    """Brute-force version of :func:`green_convolve` at grid points given as index tuples."""
    grid = g.grid
    a = g.physical().values
    ys = np.stack(np.meshgrid(*([grid.x1d] * grid.d), indexing="ij"), axis=-1).reshape(-1, grid.d)
    av = a.reshape(-1)
    if method == "cell":
        corr = _cell_average_weight(k, grid.h, grid.d) * a
    else:
        if method not in _ORDERS:
            raise ValueError(f"unknown diagonal method {method!r}")
        if sigma is None:
            sigma = min(1.0, grid.L / 6.0)
        corr = _taylor_correction(a, grid, _subtraction_weights(grid, k, sigma), _ORDERS[method], sigma)
    out = []
    for idx in points:
        idx = tuple(int(i) for i in idx)
        x = np.array([grid.x1d[i] for i in idx])
        r = np.linalg.norm(ys - x, axis=1)
        mask = r > 0
        out.append(np.sum(green_kernel(r[mask], k, grid.d) * av[mask]) * grid.cell + corr[idx])
    return np.array(out)


def radial_green_convolve(profile, k: float, d: int, rho: np.ndarray, smax: float, nodes: int = 400) -> np.ndarray:
    """G_k * g for a radial source g(|y|) = profile(|y|), evaluated at radii ``rho``.

    Uses the l = 0 term of the addition theorem:
    3D  u(rho) = int g(s) s sin(k s_<) e^{i k s_>} / (k rho) ds,
    2D  u(rho) = (i pi / 2) int g(s) J_0(k s_<) H_0(k s_>) s ds.
    """
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    x, w = np.polynomial.legendre.leggauss(nodes)
    out = np.zeros(rho.shape, dtype=complex)

    def gl(a, b):
        return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w

    for i, p in enumerate(rho):
        total = 0.0 + 0.0j
        pieces = [(0.0, min(p, smax))] if p > 0 else []
        if p < smax:
            pieces.append((p, smax))
        for a, b in pieces:
            if b <= a:
                continue
            # split further for accuracy
            edges = np.linspace(a, b, 9)
            for a2, b2 in zip(edges[:-1], edges[1:]):
                s, ws = gl(a2, b2)
                gs = profile(s)
                lo = np.minimum(s, p)
                hi = np.maximum(s, p)
                if d == 3:
                    if p == 0:
                        val = gs * s * np.exp(1j * k * s)
                    else:
                        val = gs * s * np.sin(k * lo) * np.exp(1j * k * hi) / (k * p)
                else:
                    val = 0.5j * np.pi * gs * special.j0(k * lo) * special.hankel1(0, k * hi) * s
                total += np.sum(ws * val)
        out[i] = total
    return out


# ----------------------------------------------------- conjugation identity

def conjugation_residual(f: SpectralField, k: float, gamma, guard: float = 30.0, drift_sign: int = -1) -> float:
    """Relative residual of the exponential conjugation identity.

    Computes ||e^{s g.x}(Delta + r^2 - 2 g.grad) f - (Delta + k^2)(e^{s g.x} f)|| / ||f||
    with s = ``drift_sign``; both sides use spectral derivatives.  The
    identity holds for s = -1; with s = +1 the drift term has the wrong sign
    and the residual is of order |gamma|.
    """
    grid = f.grid
    p = FaddeevParams(k, gamma)
    g = p.gamma_vec(grid.d)
    if np.linalg.norm(g) * grid.L * math.sqrt(grid.d) > guard:
        raise OverflowError("|gamma| L exceeds the exponential guard")
    a = f.physical().values
    e = np.exp(drift_sign * sum(g[i] * grid.x[i] for i in range(grid.d)))
    ah = fftn(a)
    lap = sum(ifftn(-(grid.xi[i] ** 2) * ah) for i in range(grid.d))
    grad_g = sum(g[i] * ifftn(1j * grid.xi[i] * ah) for i in range(grid.d))
    lhs = e * (lap + p.r ** 2 * a - 2.0 * grad_g)
    b = e * a
    bh = fftn(b)
    rhs = sum(ifftn(-(grid.xi[i] ** 2) * bh) for i in range(grid.d)) + k * k * b
    return float(np.linalg.norm(lhs - rhs) / np.linalg.norm(a))


# ------------------------------------------------------------- shell split

def dtft(a, grid: Grid, xi: np.ndarray, chunk: int = 4096, tol: float = 1e-17):
    """Continuous Fourier transform of grid samples at arbitrary frequencies.

    F(xi) = (2 pi)^{-d/2} h^d sum_x a(x) e^{-i xi.x}, exact for band-limited,
    box-supported data.  Only the bounding box of the joint support is summed.
    ``a`` may be a list of arrays sharing the grid; a list is returned then.
    """
    single = isinstance(a, np.ndarray)
    arrs = [np.asarray(v, dtype=complex) for v in ([a] if single else a)]
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    d = grid.d
    mag = sum(np.abs(v) / max(np.abs(v).max(), 1e-300) for v in arrs)
    if not np.any(mag):
        zero = [np.zeros(len(xi), dtype=complex) for _ in arrs]
        return zero[0] if single else zero
    sl = []
    for ax in range(d):
        other = tuple(b for b in range(d) if b != ax)
        idx = np.nonzero(mag.max(axis=other) > tol)[0]
        sl.append(slice(idx[0], idx[-1] + 1))
    subs = [v[tuple(sl)] for v in arrs]
    n1 = subs[0].shape[0]
    rest = subs[0].shape[1:]
    stacked = np.concatenate([v.reshape(n1, -1) for v in subs], axis=1)
    xs = [grid.x1d[s] for s in sl]
    scale = (2.0 * np.pi) ** (-d / 2.0) * grid.cell
    outs = [np.empty(len(xi), dtype=complex) for _ in arrs]
    nrest = int(np.prod(rest))
    for lo in range(0, len(xi), chunk):
        q = xi[lo:lo + chunk]
        E = [np.exp(-1j * np.outer(q[:, ax], xs[ax])) for ax in range(d)]
        T = E[0] @ stacked
        for i in range(len(arrs)):
            Ti = T[:, i * nrest:(i + 1) * nrest]
            if d == 2:
                outs[i][lo:lo + chunk] = np.sum(Ti * E[1], axis=1)
            else:
                Ti = Ti.reshape(-1, *rest)
                outs[i][lo:lo + chunk] = np.einsum("pjk,pj,pk->p", Ti, E[1], E[2])
    outs = [scale * o for o in outs]
    return outs[0] if single else outs


def _gl_panels(edges, order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    nodes, wts = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        nodes.append(0.5 * (b - a) * x + 0.5 * (b + a))
        wts.append(0.5 * (b - a) * w)
    return np.concatenate(nodes), np.concatenate(wts)


def shell_radial_rule(r0: float, eps0: float, tau: float, rmax: float, order: int = 24,
                      panel: float = 0.5) -> tuple:
    """Composite Gauss-Legendre rule on [0, rmax], graded toward the shell r0.

    Panels refine geometrically toward r0 down to the Lorentzian width
    |tau|/(2 r0) of 1/m, and the transition zones of psi get their own panels.
    """
    width = max(abs(tau) / (2.0 * r0), 1e-12)
    grade = [eps0 / 2.0]
    while grade[-1] > width / 8.0:
        grade.append(grade[-1] / 2.0)
    inner = sorted({r0 - g for g in grade} | {r0 + g for g in grade} | {r0})
    trans_lo = np.linspace(r0 - eps0, r0 - eps0 / 2.0, 5)
    trans_hi = np.linspace(r0 + eps0 / 2.0, r0 + eps0, 5)
    lo_end = r0 - eps0
    n_lo = max(1, int(math.ceil(lo_end / panel)))
    hi_start = r0 + eps0
    n_hi = max(1, int(math.ceil((rmax - hi_start) / panel)))
    edges = np.concatenate([np.linspace(0.0, lo_end, n_lo + 1), trans_lo, inner, trans_hi,
                            np.linspace(hi_start, max(rmax, hi_start + panel), n_hi + 1)])
    edges = np.unique(edges)
    return _gl_panels(edges, order)


def sphere_rule(d: int, n: int) -> tuple:
    """Directions and weights on S^{d-1}: trapezoid in angle (d=2), GL x trapezoid (d=3)."""
    if d == 2:
        th = 2.0 * np.pi * np.arange(n) / n
        return np.stack([np.cos(th), np.sin(th)], axis=1), np.full(n, 2.0 * np.pi / n)
    if d == 3:
        c, wc = np.polynomial.legendre.leggauss(n)
        ph = 2.0 * np.pi * np.arange(2 * n) / (2 * n)
        s = np.sqrt(1.0 - c * c)
        om = np.stack([np.outer(s, np.cos(ph)).ravel(), np.outer(s, np.sin(ph)).ravel(),
                       np.repeat(c, 2 * n)], axis=1)
        w = np.repeat(wc, 2 * n) * (np.pi / n)
        return om, w
    raise ValueError("dimension must be 2 or 3")


def _check_shell(params: FaddeevParams, cutoff: ShellCutoff) -> None:
    r = params.r
    if not (0.0 < cutoff.eps0 < min(r / 4.0, 1.0)):
        raise ValueError(f"eps0 = {cutoff.eps0:g} outside (0, min(r/4, 1)) = (0, {min(r / 4.0, 1.0):g})")
    if params.tau == 0 or abs(params.tau) >= cutoff.eps0 ** 2:
        raise ValueError(f"need 0 < |tau| < eps0^2, got tau = {params.tau:g}")
    if abs(cutoff.r0 - r) > 1e-12 * r:
        raise ValueError("shell radius must equal r_{k,gamma}")


def spectral_radius(a: np.ndarray, grid: Grid, tol: float = 1e-13) -> float:
    """Smallest |xi| beyond which the lattice spectrum of ``a`` is below tol * max."""
    m = np.abs(fftn(a))
    if m.max() == 0:
        return 0.0
    return float(grid.xi_abs[m > tol * m.max()].max())


def support_radius(a: np.ndarray, grid: Grid, tol: float = 1e-17) -> float:
    m = np.abs(a)
    if m.max() == 0:
        return 0.0
    return float(grid.r[m > tol * m.max()].max())


@dataclass
class ShellSplit:
    I1: complex
    I2: complex
    I3: complex

    @property
    def total(self) -> complex:
        return self.I1 + self.I2 + self.I3


def shell_split_pairing(f: SpectralField, g: SpectralField, params: FaddeevParams, s: float = 0.0,
                        cutoff: ShellCutoff | None = None, rmax: float | None = None,
                        order: int = 24, n_angle: int | None = None) -> ShellSplit:
    """Split <(I - Delta)^{s/2} H_{k,gamma,tau} f, g> into off-shell, frozen-shell and
    difference parts by polar quadrature in frequency.

    Parameters
    ----------
    f, g : SpectralField
        Band-limited fields supported inside the box.
    params : FaddeevParams
        k, gamma and tau with 0 < |tau| < eps0^2.
    cutoff : ShellCutoff, optional
        Defaults to radius r_{k,gamma} and half-width eps0 = min(r/4, 1)/2.
    rmax : float, optional
        Radial truncation; defaults to the spectral extent of f and g
        (capped at the lattice Nyquist radius).

    Returns
    -------
    ShellSplit with I1 (weight 1 - psi), I2 (shell values frozen at r_{k,gamma})
    and I3 (remainder inside the shell).
    """
    grid = f.grid
    if g.grid != grid:
        raise ValueError("grid mismatch")
    if not (0.0 <= s <= 2.0):
        raise ValueError("s must lie in [0, 2]")
    r0 = params.r
    if cutoff is None:
        cutoff = ShellCutoff(r0, default_eps0(r0))
    _check_shell(params, cutoff)
    a = f.physical().values
    b = g.physical().values
    if not np.any(b) or not np.any(a):
        return ShellSplit(0j, 0j, 0j)
    d = grid.d
    if rmax is None:
        ext = min(spectral_radius(a, grid), spectral_radius(b, grid))
        rmax = min(grid.xi_nyquist, max(ext + 1.0, r0 + 2.0 * cutoff.eps0))
    rr, wr = shell_radial_rule(r0, cutoff.eps0, params.tau, rmax, order)
    if n_angle is None:
        extent = max(support_radius(a, grid), support_radius(b, grid), 1.0)
        n_angle = int(math.ceil(2.0 * rmax * extent / (2.0 if d == 3 else 1.0))) + 16
    om, wo = sphere_rule(d, n_angle)
    gam = params.gamma_vec(d)
    # all frequency nodes, radius-major
    xi = (rr[:, None, None] * om[None, :, :]).reshape(-1, d)
    F, G = (v.reshape(len(rr), len(om)) for v in dtft([a, b], grid, xi))
    F0, G0 = dtft([a, b], grid, r0 * om)
    m = (rr[:, None] ** 2 - r0 ** 2 + 2j * rr[:, None] * (om @ gam)[None, :] - 1j * params.tau)
    lift = (1.0 + rr ** 2) ** (0.5 * s)
    psi = cutoff(rr)
    radial = (lift * rr ** (d - 1) * wr)[:, None]
    W = radial * wo[None, :] / m
    prod = F * np.conj(G)
    prod0 = (F0 * np.conj(G0))[None, :]
    I1 = np.sum(W * (1.0 - psi)[:, None] * prod)
    I2 = np.sum(W * psi[:, None] * prod0)
    I3 = np.sum(W * psi[:, None] * (prod - prod0))
    return ShellSplit(complex(I1), complex(I2), complex(I3))


def direct_pairing(f: SpectralField, g: SpectralField, params: FaddeevParams, s: float = 0.0,
                   domain: str = "free", pad: int = 2) -> complex:
    """<(I - Delta)^{s/2} H_{k,gamma,tau} f, g> = h^d sum (H f) conj(g) in physical space."""
    u = regularized_apply(f, params, s, domain=domain, pad=pad)
    return complex(np.sum(u.values * np.conj(g.physical().values)) * f.grid.cell)


def exchange_discrepancy(f: SpectralField, k: float, gamma, R: float, lam: float = 1.0,
                         tau: float | None = None) -> float:
    """||Phi H_{k lam,tau} Phi f - e^{-gamma.x} Phi H_{k lam,gamma,tau} Phi e^{gamma.x} f|| / ||Phi H Phi f||.

    Both paths use the lattice multiplier at the same tau (default eps0^2/2),
    and the exponentials only ever touch Phi-truncated data.
    """
    from .paraproduct import cutoff_field
    grid = f.grid
    p = FaddeevParams(k * lam, gamma)
    if p.gamma_norm == 0:
        raise ValueError("gamma must be non-zero")
    if tau is None:
        tau = default_tau(default_eps0(p.r))
    phi = cutoff_field(grid, R, lam)
    g = p.gamma_vec(grid.d)
    phase = sum(g[a] * grid.x[a] for a in range(grid.d))
    big = phi > 0
    e_plus = np.where(big, np.exp(np.where(big, phase, 0.0)), 0.0)
    e_minus = np.where(big, np.exp(-np.where(big, phase, 0.0)), 0.0)
    a = phi * f.physical().values
    free = phi * ifftn(periodic_symbol(grid, FaddeevParams(k * lam, (), tau), 0.0) * fftn(a))
    drift = e_minus * phi * ifftn(periodic_symbol(grid, p.with_tau(tau), 0.0) * fftn(e_plus * a))
    return float(np.linalg.norm(free - drift) / np.linalg.norm(free))
