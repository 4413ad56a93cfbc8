"""Rescaled Lippmann-Schwinger solver for Delta u + k^2 u + V_k u = g.

With H^+ = -(Delta + k^2 + i0)^{-1} the equation reads
u = H^+(-g) + H^+(V_k u).  After the dilation x -> lambda x the rescaled
unknown u_lam(x) = u(lam x) solves

    u_lam = H^+_{k lam}(-g_lam) + lam^2 H^+_{k lam}(V_{k,lam} u_lam),

with g_lam = lam^2 g(lam x) and V_{k,lam} = V_k(lam x).  Since V_{k,lam} is
supported where the cutoff Phi_{R,lam} equals 1, v = Phi u_lam obeys the
truncated fixed-point equation v = lam^2 Phi H^+ Phi Xi(v) + Phi H^+(-g_lam),
which is iterated by Picard steps.  The dilation is realised exactly by
reusing the samples on the grid of half length L / lam.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from scipy.sparse.linalg import LinearOperator, cg

from .grid import Grid, SpectralField, WeightSpec, fftn, ifftn, lp_norm_array
from .littlewood_paley import DEFAULT_PAIR, block_norms, block_symbols, combine_blocks, plateau
from .paraproduct import BonyMultiplier, cutoff_profile
from .resolvents import FaddeevParams, outgoing_apply


# ------------------------------------------------------------------ problem

@dataclass(frozen=True, eq=False)
class HelmholtzProblem:
    """Coefficients eps, sigma, rho and source g on a grid, wavenumber k, support radius R."""

    grid: Grid
    eps: np.ndarray
    sigma: np.ndarray
    rho: np.ndarray
    g: np.ndarray
    k: float
    R: float

    @property
    def V(self) -> np.ndarray:
        """V_k = k^2 eps + i k sigma + rho."""
        return self.k ** 2 * self.eps + 1j * self.k * self.sigma + self.rho


def _as_grid_array(grid: Grid, a) -> np.ndarray:
    if a is None:
        return np.zeros(grid.shape, dtype=complex)
    if isinstance(a, SpectralField):
        a = a.physical().values
    if callable(a):
        a = a(*grid.x)
    return np.broadcast_to(np.asarray(a, dtype=complex), grid.shape).copy()


def build_problem(grid: Grid, eps=None, sigma=None, rho=None, g=None, k: float = 1.0, R: float = 1.0,
                  support_tol: float = 1e-10) -> HelmholtzProblem:
    """Validate and assemble a problem; every field must vanish outside B(0, R)."""
    if not k > 0:
        raise ValueError("k must be positive")
    if not 0 < R < grid.L / 4.0:
        raise ValueError(f"need 0 < R < L/4 = {grid.L / 4.0:g}, got R = {R:g}")
    arrs = {}
    outside = grid.r > R
    for name, a in (("eps", eps), ("sigma", sigma), ("rho", rho), ("g", g)):
        v = _as_grid_array(grid, a)
        if np.any(np.abs(v[outside]) > support_tol):
            raise ValueError(f"{name} does not vanish outside B(0, {R:g})")
        arrs[name] = v
    return HelmholtzProblem(grid, arrs["eps"], arrs["sigma"], arrs["rho"], arrs["g"], float(k), float(R))


def rescale_problem(problem: HelmholtzProblem, lam: float) -> tuple:
    """Return (grid_lam, V_{k,lam}, g_lam) with V_{k,lam}(x) = V_k(lam x), g_lam = lam^2 g(lam x).

    The dilate is represented on the grid of half length L / lam with the
    original samples, so no interpolation error or out-of-band energy occurs.
    """
    if not 0 < lam <= 1:
        raise ValueError("lambda must lie in (0, 1]")
    grid_lam = problem.grid.scaled(1.0 / lam)
    return grid_lam, problem.V.copy(), lam ** 2 * problem.g


# ------------------------------------------------------------------- config

@dataclass(frozen=True)
class SolverConfig:
    """Rescale parameter, drift and working-norm exponents of the Picard solver."""

    lam: float = 1.0
    gamma: tuple = ()
    r: float = 1.3
    eta0: float = 0.6
    p: float = 2.0
    q: float = 2.0
    max_iter: int = 200
    tol: float = 1e-10
    auto_lambda: bool = True
    min_lam: float = 2.0 ** -6
    warmup: int = 4
    bony: bool = True

    def __post_init__(self):
        if not 0 < self.lam <= 1:
            raise ValueError("lambda must lie in (0, 1]")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        gn = math.sqrt(sum(c * c for c in self.gamma))
        if gn > 0:
            if not 1 < gn < 2:
                raise ValueError("|gamma| must lie in (1, 2) when the drift is enabled")
            if not 0.5 < self.eta0 < 1:
                raise ValueError("eta0 must lie in (1/2, 1) when the drift is enabled")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")

    @property
    def gamma_norm(self) -> float:
        return math.sqrt(sum(c * c for c in self.gamma))


@dataclass
class Solution:
    u: np.ndarray
    v: np.ndarray
    lam: float
    iterations: int
    increments: list
    contraction: float
    converged: bool
    fixed_point_residual: float
    pde_residual: float = float("nan")
    radiation_metric: float = float("nan")
    lam_history: list = field(default_factory=list)
    grid: Grid | None = None


# ---------------------------------------------------------------- operators

class _RescaledMap:
    """Pieces of the rescaled fixed-point map on grid_lam."""

    def __init__(self, problem: HelmholtzProblem, config: SolverConfig, lam: float):
        self.problem = problem
        self.config = config
        self.lam = lam
        self.grid, self.V, self.g = rescale_problem(problem, lam)
        self.klam = problem.k * lam
        self.gamma = tuple(config.gamma)
        # Phi_{R,lam}(x') = phi_R(lam x') = phi_R(x) in original coordinates
        self.phi = cutoff_profile(lam * self.grid.r, problem.R, problem.R)
        self.xi = BonyMultiplier(self.V, self.grid) if config.bony else None
        self.weight = WeightSpec(config.eta0, -1, lam)
        self.drift = config.gamma_norm > 0
        if self.drift:
            gv = FaddeevParams(1.0, self.gamma).gamma_vec(self.grid.d)
            phase = sum(gv[a] * self.grid.x[a] for a in range(self.grid.d))
            # exponentials are only ever applied to Phi-truncated fields
            big = self.phi > 0
            self.e_minus = np.where(big, np.exp(-np.where(big, phase, 0.0)), 0.0)
            self.e_plus = np.where(big, np.exp(np.where(big, phase, 0.0)), 0.0)

    def H(self, a: np.ndarray, gamma=()) -> np.ndarray:
        return outgoing_apply(a, self.grid, self.klam, gamma)

    def Xi(self, u: np.ndarray) -> np.ndarray:
        if self.xi is None:
            return self.V * u
        return self.xi.apply(u)

    def source_term(self) -> np.ndarray:
        """G = e^{-gamma.x} Phi H^+(-g_lam) (no exponential when gamma = 0)."""
        G = self.phi * self.H(-self.g)
        return self.e_minus * G if self.drift else G

    def step(self, v: np.ndarray, G: np.ndarray) -> np.ndarray:
        lam2 = self.lam ** 2
        if self.drift:
            # V e^{gamma.x} v is needed only on supp V, where Phi = 1
            w = self.phi * self.Xi(self.e_plus * v)
            return lam2 * self.phi * self.H(self.e_minus * w, self.gamma) + G
        return lam2 * self.phi * self.H(self.phi * self.Xi(v)) + G

    def norm(self, a: np.ndarray) -> float:
        c = self.config
        return combine_blocks(block_norms(a, self.grid, c.p, self.weight), c.r, c.q)

    def assemble(self, v: np.ndarray) -> np.ndarray:
        """u_lam = lam^2 H^+ Xi e^{gamma.x} v + H^+(-g_lam) on the whole rescaled box."""
        vv = self.e_plus * v if self.drift else v
        return self.lam ** 2 * self.H(self.Xi(vv)) + self.H(-self.g)


def _run_picard(m: _RescaledMap, config: SolverConfig) -> tuple:
    G = m.source_term()
    v = G.copy()
    scale = max(m.norm(G), 1e-300)
    incs = []
    converged = False
    contraction = 0.0
    it = 0
    for it in range(1, config.max_iter + 1):
        nv = m.step(v, G)
        inc = m.norm(nv - v)
        incs.append(inc)
        v = nv
        if inc <= config.tol * scale:
            converged = True
            break
        ratios = [incs[i + 1] / incs[i] for i in range(len(incs) - 1) if incs[i] > 0]
        if ratios:
            contraction = float(np.median(ratios))
        if len(incs) > config.warmup and contraction >= 1.0:
            break
    ratios = [incs[i + 1] / incs[i] for i in range(len(incs) - 1) if incs[i] > 0]
    contraction = float(np.median(ratios)) if ratios else 0.0
    if converged and len(incs) > 1 and not all(b < a for a, b in zip(incs[:-1], incs[1:])):
        converged = False
    return v, it, incs, contraction, converged, scale


def contraction_factor(problem: HelmholtzProblem, config: SolverConfig, iterations: int = 12) -> float:
    """Median increment ratio of the Picard map over a fixed number of steps (no stopping)."""
    m = _RescaledMap(problem, config, config.lam)
    G = m.source_term()
    v = G.copy()
    incs = []
    for _ in range(iterations):
        nv = m.step(v, G)
        incs.append(m.norm(nv - v))
        v = nv
    ratios = [incs[i + 1] / incs[i] for i in range(len(incs) - 1) if incs[i] > 0]
    return float(np.median(ratios[len(ratios) // 2:])) if ratios else 0.0


def lipschitz_constant(problem: HelmholtzProblem, config: SolverConfig, iters: int = 40, rtol: float = 1e-6,
                       seed: int = 0) -> float:
    """Operator norm of T v = lam^2 Phi H^+ Phi Xi v on B^r_{2,2}(<x>^{-eta0}, lam).

    For p = q = 2 the working norm is ||v||^2 = <v, M v> with
    M = sum_j 2^{2jr} Delta_j rho^2 Delta_j, so ||T||^2 is the top eigenvalue
    of M^{-1} T* M T.  Power iteration with preconditioned CG solves for M;
    T* uses the incoming resolvent and conj(V) (the Bony product equals the
    pointwise product on the grid).  Unlike :func:`contraction_factor`,
    which tends to the spectral radius, this depends on lambda through the
    norm.
    """
    if config.p != 2 or config.q != 2:
        raise ValueError("the operator norm is only available for p = q = 2")
    if config.gamma_norm > 0:
        raise ValueError("the operator norm is only available without drift")
    lam = config.lam
    m = _RescaledMap(problem, config, lam)
    gr = m.grid
    sh = gr.shape
    n = int(np.prod(sh))
    rho = m.weight(*gr.x) * np.ones(sh)
    rho2 = rho * rho
    syms = block_symbols(gr)
    wj = [2.0 ** (2 * (j - 1) * config.r) for j in range(len(syms))]
    S = sum(w * s * s for w, s in zip(wj, syms))

    def M(v):
        vh = fftn(v)
        out = np.zeros(sh, dtype=complex)
        for w, s in zip(wj, syms):
            out += w * ifftn(s * fftn(rho2 * ifftn(s * vh)))
        return out

    def T(v):
        return lam ** 2 * m.phi * m.H(m.phi * m.Xi(v))

    def T_adj(w):
        return np.conj(m.V) * m.phi * lam ** 2 * outgoing_apply(m.phi * w, gr, m.klam, (), sign=-1)

    Mop = LinearOperator((n, n), matvec=lambda x: M(x.reshape(sh)).ravel(), dtype=complex)
    # rho S rho approximates M, so its inverse preconditions CG
    Pop = LinearOperator((n, n), matvec=lambda x: (ifftn(fftn(x.reshape(sh) / rho) / S) / rho).ravel(),
                         dtype=complex)
    rng = np.random.default_rng(seed)
    v = (rng.normal(size=sh) * m.phi).astype(complex)
    v /= math.sqrt(np.vdot(v, M(v)).real)
    mu = 0.0
    for it in range(iters):
        x, info = cg(Mop, T_adj(M(T(v))).ravel(), rtol=1e-9, maxiter=2000, M=Pop, x0=v.ravel())
        v = x.reshape(sh)
        den = np.vdot(v, M(v)).real
        if den <= 0:
            return 0.0
        tv = T(v)
        new = math.sqrt(max(np.vdot(tv, M(tv)).real, 0.0) / den)
        v /= math.sqrt(den)
        if it > 2 and abs(new - mu) <= rtol * new:
            return new
        mu = new
    return mu


def picard_solve(problem: HelmholtzProblem, config: SolverConfig = SolverConfig()) -> Solution:
    """Iterate the truncated map from v_0 = G and assemble u on the original scale.

    If ``config.auto_lambda`` is set and the warmup contraction estimate is
    >= 0.9, lambda is halved (down to ``min_lam``) and the solve restarts.
    """
    lam = config.lam
    history = []
    while True:
        m = _RescaledMap(problem, config, lam)
        v, it, incs, contraction, converged, scale = _run_picard(m, config)
        history.append((lam, contraction))
        retry = (config.auto_lambda and not converged and contraction >= 0.9 and lam / 2 >= config.min_lam)
        if not retry:
            break
        lam /= 2.0
    u_lam = m.assemble(v)
    # (u_lam)_{1/lam}: samples on grid_lam are the samples of u on the original grid
    fp = m.norm(m.step(v, m.source_term()) - v) / scale
    return Solution(u=u_lam, v=v, lam=lam, iterations=it, increments=incs, contraction=contraction,
                    converged=converged, fixed_point_residual=fp, lam_history=history, grid=problem.grid)


def assemble_and_rescale(v: np.ndarray, problem: HelmholtzProblem, config: SolverConfig) -> np.ndarray:
    """u on the original grid from a fixed point v computed at config.lam."""
    m = _RescaledMap(problem, config, config.lam)
    return m.assemble(v)


def truncation_mismatch(sol: Solution, problem: HelmholtzProblem, config: SolverConfig) -> float:
    """||Phi u_lam - v|| / ||v|| in the working norm (gamma = 0)."""
    m = _RescaledMap(problem, config, sol.lam)
    nv = m.norm(sol.v)
    return m.norm(m.phi * sol.u - sol.v) / max(nv, 1e-300)


# -------------------------------------------------------------- diagnostics

def _window(grid: Grid) -> np.ndarray:
    return plateau(grid.r, 0.65 * grid.L, grid.L)


def helmholtz_apply(u: np.ndarray, grid: Grid, k: float, V: np.ndarray | None = None) -> np.ndarray:
    """(Delta + k^2 + V) u with a spectral Laplacian of the windowed field.

    The window equals 1 on |x| <= 0.65 L, so the result is exact there even
    though u itself is not periodic.
    """
    w = _window(grid) * u
    lap = ifftn(-(grid.xi_abs ** 2) * fftn(w))
    out = lap + k * k * w
    if V is not None:
        out = out + V * u
    return out


def pde_residual(u: np.ndarray, problem: HelmholtzProblem, r: float = 1.3, eta0: float = 0.6) -> tuple:
    """(||res||, ||g||) in B^{r-2}_{2,2}(<x>^{eta0}) with res = (Delta + k^2 + V) u - g on |x| < 0.5 L."""
    grid = problem.grid
    res = helmholtz_apply(u, grid, problem.k, problem.V) - problem.g
    res = res * plateau(grid.r, 0.5 * grid.L, 0.6 * grid.L)
    w = WeightSpec(eta0, 1)
    nr = combine_blocks(block_norms(res, grid, 2.0, w), r - 2.0, 2.0)
    ng = combine_blocks(block_norms(problem.g, grid, 2.0, w), r - 2.0, 2.0)
    return nr, ng


def radiation_profile(u: np.ndarray, grid: Grid, k: float, R: float, count: int | None = None) -> tuple:
    """rho^{(d-1)/2} |d_rho u - i k u| along the 2d coordinate half-axes.

    Radii are the grid radii in [2R, L/2]; the radial derivative uses a
    spectral gradient of the windowed field.  Returns (radii, max over rays).
    """
    w = _window(grid) * u
    wh = fftn(w)
    c = grid.N // 2
    radii = grid.x1d[c:]
    sel = (radii >= 2.0 * R - 1e-12) & (radii <= grid.L / 2.0 + 1e-12)
    idx = np.nonzero(sel)[0] + c
    vals = np.zeros((2 * grid.d, idx.size))
    for ax in range(grid.d):
        du = ifftn(1j * grid.xi[ax] * wh)
        for s, sgn in enumerate((1, -1)):
            ii = idx if sgn > 0 else (2 * c - idx)
            sl = [c] * grid.d
            pts = []
            for i in ii:
                sl[ax] = i
                pts.append(tuple(sl))
            uu = np.array([u[p] for p in pts])
            dd = np.array([du[p] for p in pts]) * sgn
            rho = np.abs(grid.x1d[ii])
            vals[2 * ax + s] = rho ** ((grid.d - 1) / 2.0) * np.abs(dd - 1j * k * uu)
    return grid.x1d[idx], vals.max(axis=0)


def residual_check(u: np.ndarray, problem: HelmholtzProblem, r: float = 1.3, eta0: float = 0.6) -> tuple:
    """(relative pde residual, radiation metric)."""
    nr, ng = pde_residual(u, problem, r, eta0)
    rel = nr / ng if ng > 0 else nr
    _, prof = radiation_profile(u, problem.grid, problem.k, problem.R)
    return float(rel), float(prof.max()) if prof.size else 0.0


def solve(problem: HelmholtzProblem, config: SolverConfig = SolverConfig()) -> Solution:
    """picard_solve plus residual and radiation diagnostics."""
    sol = picard_solve(problem, config)
    sol.pde_residual, sol.radiation_metric = residual_check(sol.u, problem, config.r, config.eta0)
    return sol


# ------------------------------------------------------------------ checks

def poly_bump(grid: Grid, R: float, amp: float = 1.0, center=None, m: int = 12) -> np.ndarray:
    """amp * (1 - |x-c|^2/R^2)^m inside B(c, R), 0 outside.

    C^{m-1} with Fourier tails of order |xi R|^{-(m+1+(d+1)/2)}, so it is
    effectively band-limited on desk-scale grids.
    """
    c = np.zeros(grid.d) if center is None else np.asarray(center, dtype=float)
    t = 1.0 - sum((grid.x[a] - c[a]) ** 2 for a in range(grid.d)) / R ** 2
    return amp * np.where(t > 0, t, 0.0) ** m * np.ones(grid.shape)


def dual_lambda_check(problem: HelmholtzProblem, lam1: float, lam2: float,
                      config: SolverConfig = SolverConfig()) -> tuple:
    """Relative difference of the solutions computed at two rescale parameters."""
    s1 = picard_solve(problem, _with(config, lam=lam1, auto_lambda=False))
    s2 = picard_solve(problem, _with(config, lam=lam2, auto_lambda=False))
    mask = problem.grid.r < problem.grid.L
    diff = np.linalg.norm((s1.u - s2.u)[mask]) / np.linalg.norm(s1.u[mask])
    return float(diff), s1, s2


def manufactured_problem(grid: Grid, k: float, R: float, V_amp: float = 0.3, seed: int = 0) -> tuple:
    """Problem with known solution u* (smooth bump) and smooth real V; returns (problem, u*)."""
    rng = np.random.default_rng(seed)
    c = rng.uniform(-0.2, 0.2, size=grid.d) * R
    ustar = poly_bump(grid, 0.8 * R, 1.0, c).astype(complex)
    rho = poly_bump(grid, R, V_amp)
    base = build_problem(grid, rho=rho, g=np.zeros(grid.shape), k=k, R=R)
    lap = ifftn(-(grid.xi_abs ** 2) * fftn(ustar))
    g = lap + k * k * ustar + base.V * ustar
    g[grid.r > R] = 0.0
    return build_problem(grid, rho=rho, g=g, k=k, R=R), ustar


def _with(config: SolverConfig, **kw) -> SolverConfig:
    d = dict(config.__dict__)
    d.update(kw)
    return SolverConfig(**d)
