"""Command-line front end: INI config in, deterministic CSV out.

Config layout::

    [grid]
    d = 2
    N = 128
    L = 8.35

    [run]
    command = sweep-thmF
    seed = 0
    out = results

    [params]
    k_list = 0.5, 1, 2, 4, 8
    gamma_list = 0; 1.5, 0

Vector lists separate vectors with ';' and components with ','; a lone 0
is the zero drift.  Exit codes: 0 pass, 1 predicate failure, 2 config error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import __version__
from .grid import Grid, WeightSpec, fftn, ifftn, lp_norm_array, make_field, make_grid, set_fft_workers
from .littlewood_paley import (BesovSpec, besov_norm, blocks_array, check_weight_admissible, jmax,
                               lifting_apply, partition_residual)
from .paraproduct import bony_decompose, xi_apply
from .resolvents import (FaddeevParams, default_eps0, default_tau, direct_pairing, green_convolve,
                         inverse_residual, limiting_apply, shell_split_pairing)
from .estimates import (DEFAULT_PC1, STABILITY, block_shift_error, paraproduct_sweep, random_smooth_field,
                        scaling_sweep, single_shell_field, windowed_band_field, sweep_Hsg, sweep_PHLp, sweep_thmF)
from .solver import (SolverConfig, build_problem, dual_lambda_check, manufactured_problem, poly_bump,
                     radiation_profile, solve)


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------------ parsing

def _float(s: str) -> float:
    return float(s)


def _int(s: str) -> int:
    v = float(s)
    if v != int(v):
        raise ValueError(f"{s!r} is not an integer")
    return int(v)


def _bool(s: str) -> bool:
    t = s.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"{s!r} is not a boolean")


def _floats(s: str) -> tuple:
    return tuple(float(x) for x in s.replace(";", ",").split(",") if x.strip())


def _vectors(s: str) -> tuple:
    out = []
    for part in s.split(";"):
        if not part.strip():
            continue
        v = tuple(float(x) for x in part.split(",") if x.strip())
        out.append(() if all(c == 0 for c in v) else v)
    return tuple(out)


def _vector(s: str) -> tuple:
    v = _vectors(s)
    if len(v) > 1:
        raise ValueError("expected a single vector")
    return v[0] if v else ()


def _words(s: str) -> tuple:
    return tuple(x.strip() for x in s.split(",") if x.strip())


@dataclass
class CommandSpec:
    runner: Callable
    params: dict
    randomized: Callable = lambda p: True


@dataclass
class RunConfig:
    grid: Grid
    command: str
    params: dict
    seed: int | None
    out: str
    provenance: dict = field(default_factory=dict)


GRID_KEYS = {"d": (_int, 2), "N": (_int, 128), "L": (_float, 8.35)}
RUN_KEYS = {"command": (str, None), "seed": (_int, None), "out": (str, ".")}


def parse_config(text: str, seed: int | None = None, out: str | None = None) -> RunConfig:
    """Parse INI text into a validated RunConfig.

    ``seed`` and ``out`` override the file values (flag provenance).
    Raises ConfigError on unknown sections or keys, type mismatches, grid
    validation failures and a missing seed for randomized commands.
    """
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"unparsable config: {e}") from None
    for sec in cp.sections():
        if sec not in ("grid", "run", "params"):
            raise ConfigError(f"unknown section [{sec}]")
    prov = {}

    def take(section, keys):
        vals = {}
        have = dict(cp[section]) if cp.has_section(section) else {}
        for key in have:
            if key not in keys:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
        for key, (conv, default) in keys.items():
            if key in have:
                try:
                    vals[key] = conv(have[key])
                except ValueError as e:
                    raise ConfigError(f"bad value for {section}.{key}: {e}") from None
                prov[f"{section}.{key}"] = "config"
            else:
                vals[key] = default
                prov[f"{section}.{key}"] = "default"
        return vals

    g = take("grid", GRID_KEYS)
    run = take("run", RUN_KEYS)
    cmd = run["command"]
    if cmd is None:
        raise ConfigError("missing [run] command")
    if cmd not in COMMANDS:
        raise ConfigError(f"unknown command {cmd!r}")
    spec = COMMANDS[cmd]
    params = take("params", spec.params)
    if seed is not None:
        run["seed"] = seed
        prov["run.seed"] = "flag"
    if out is not None:
        run["out"] = out
        prov["run.out"] = "flag"
    try:
        grid = make_grid(g["d"], g["N"], g["L"])
    except ValueError as e:
        raise ConfigError(f"grid: {e}") from None
    if spec.randomized(params) and run["seed"] is None:
        raise ConfigError(f"command {cmd!r} is randomized and needs a seed")
    return RunConfig(grid, cmd, params, run["seed"], run["out"], prov)


# ------------------------------------------------------------------ results

@dataclass
class Result:
    columns: tuple
    rows: list
    passed: bool


def _table_result(table, extra=()) -> Result:
    rows = [tuple(extra) + tuple(r.params) + (r.measured, r.bound, r.quotient, r.passed) for r in table.rows]
    return Result(table.columns, rows, table.passed)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def format_csv(cfg: RunConfig, res: Result) -> str:
    buf = io.StringIO()
    g = cfg.grid
    buf.write(f"# helmspec {__version__} command={cfg.command} d={g.d} N={g.N} L={_fmt(g.L)} "
              f"seed={cfg.seed if cfg.seed is not None else 'none'}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(res.columns)
    for row in res.rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


# ----------------------------------------------------------------- commands

def _field_seed(seed, i: int) -> int:
    return (0 if seed is None else int(seed)) * 1000 + i


def _band_field(grid: Grid, seed: int, band: float) -> np.ndarray:
    rng = np.random.default_rng(seed)
    a = rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)
    return ifftn(fftn(a) * (grid.xi_abs <= band))


def run_partition_check(cfg: RunConfig) -> Result:
    grid, p = cfg.grid, cfg.params
    tol = p["tol"]
    rows = [("lattice", -1, partition_residual(grid), tol)]
    band = p["band_fraction"] * grid.xi_nyquist
    for i in range(p["samples"]):
        a = _band_field(grid, _field_seed(cfg.seed, i), band)
        rec = sum(blocks_array(a, grid))
        rows.append(("field", i, float(np.abs(rec - a).max() / np.abs(a).max()), tol))
    rows = [r + (r[2] <= r[3],) for r in rows]
    return Result(("item", "index", "residual", "bound", "pass"), rows, all(r[-1] for r in rows))


def run_besov_props(cfg: RunConfig) -> Result:
    grid, p = cfg.grid, cfg.params
    rows = []
    r, eta, factor = p["r"], p["eta"], p["factor"]
    # single-shell law
    j = min(p["shell"], jmax(grid) - 1)
    a = single_shell_field(grid, j, _field_seed(cfg.seed, 0))
    f = make_field(grid, a)
    nb = besov_norm(f, BesovSpec(r, 2.0, 2.0))
    expect = 2.0 ** (j * r) * lp_norm_array(blocks_array(a, grid)[j + 1], 2, grid.cell)
    rows.append(("single_shell", j, abs(nb - expect) / expect, 1e-10))
    # weight equivalence and lifting equivalence over a random set
    wr, lr = [], []
    s = p["s"]
    for i in range(p["samples"]):
        a = random_smooth_field(grid, _field_seed(cfg.seed, i + 1), support=grid.L / 4)
        f = make_field(grid, a)
        w = WeightSpec(eta, 1)(*grid.x)
        wr.append(besov_norm(f, BesovSpec(r, 2.0, 2.0, WeightSpec(eta, 1)))
                  / besov_norm(make_field(grid, a * w), BesovSpec(r, 2.0, 2.0)))
        lr.append(besov_norm(lifting_apply(f, s), BesovSpec(r, 2.0, 2.0))
                  / besov_norm(f, BesovSpec(r + s, 2.0, 2.0)))
    for name, v in (("weight_equivalence", wr), ("lifting_equivalence", lr)):
        v = np.asarray(v)
        spread = float(v.max() / v.min()) if v.size else 1.0
        rows.append((name, len(v), spread, factor))
    for name, sampler in (("admissible_pos", lambda x: WeightSpec(eta, 1)(*x.T)),
                          ("admissible_neg", lambda x: WeightSpec(eta, -1)(*x.T))):
        rep = check_weight_admissible(sampler, eta, seed=_field_seed(cfg.seed, 99), d=grid.d)
        rows.append((name, 0, rep.max_ratio, rep.bound))
    rows = [r + (bool(r[2] <= r[3]),) for r in rows]
    return Result(("property", "index", "measured", "bound", "pass"), rows, all(r[-1] for r in rows))


def run_paraproduct_check(cfg: RunConfig) -> Result:
    grid, p = cfg.grid, cfg.params
    rows = []
    for i in range(p["samples"]):
        a = random_smooth_field(grid, _field_seed(cfg.seed, 2 * i), support=grid.L / 4)
        b = random_smooth_field(grid, _field_seed(cfg.seed, 2 * i + 1), support=grid.L / 4)
        f, g = make_field(grid, a), make_field(grid, b)
        prod = a * b
        err = np.abs(bony_decompose(f, g).total().physical().values - prod).max() / np.abs(prod).max()
        rows.append(("bony", "pair", float(i), float(err), p["tol"], math.nan, bool(err <= p["tol"])))
        xv = xi_apply(f, g).physical().values
        err = np.abs(xv - prod).max() / np.abs(prod).max()
        rows.append(("xi_pointwise", "pair", float(i), float(err), p["tol"], math.nan, bool(err <= p["tol"])))
    ok = all(r[-1] for r in rows)
    cases = {c.kind: c for c in DEFAULT_PC1}
    for kind in p["cases"]:
        if kind not in cases:
            raise ConfigError(f"unknown paraproduct case {kind!r}")
        t = paraproduct_sweep(grid, cases[kind], p["lam_list"], p["family"], int(cfg.seed),
                              factor=p["factor"])
        for r in t.rows:
            rows.append(("pc1", kind, r.params[0], r.measured, r.bound, r.quotient, r.passed))
        ok = ok and t.passed
    return Result(("check", "case", "parameter", "measured", "bound", "quotient", "pass"), rows, ok)


def run_resolvent_apply(cfg: RunConfig) -> Result:
    grid, p = cfg.grid, cfg.params
    _need_lists(p, "k_list", "gamma_list", "tau_list")
    a = windowed_band_field(grid, _field_seed(cfg.seed, 0), 0.4 * grid.xi_nyquist, 0.5 * grid.xi_nyquist)
    f = make_field(grid, a)
    rows = []
    for k in p["k_list"]:
        for gam in p["gamma_list"]:
            for tau in p["tau_list"]:
                pr = FaddeevParams(k, gam, tau)
                left, right = inverse_residual(f, pr)
                m = max(left, right)
                rows.append((k, pr.gamma_norm, tau, m, p["tol"], bool(m <= p["tol"])))
    return Result(("k", "gamma", "tau", "measured", "bound", "pass"), rows, all(r[-1] for r in rows))


def _shell_field(grid: Grid, seed: int) -> np.ndarray:
    return windowed_band_field(grid, seed, 3.0, 4.0, 0.7)


def run_shell_split_check(cfg: RunConfig) -> Result:
    grid, p = cfg.grid, cfg.params
    _need_lists(p, "k_list", "s_list")
    rows = []
    for i in range(p["samples"]):
        k = p["k_list"][i % len(p["k_list"])]
        s = p["s_list"][i % len(p["s_list"])]
        f = make_field(grid, _shell_field(grid, _field_seed(cfg.seed, 2 * i)))
        g = make_field(grid, _shell_field(grid, _field_seed(cfg.seed, 2 * i + 1)))
        params = FaddeevParams(k, p["gamma"])
        params = params.with_tau(default_tau(default_eps0(params.r)))
        sp = shell_split_pairing(f, g, params, s)
        ref = direct_pairing(f, g, params, s)
        scale = lp_norm_array(f.values, 2, grid.cell) * lp_norm_array(g.values, 2, grid.cell)
        scale *= (1.0 + params.r ** 2) ** (s / 2.0)
        err = abs(sp.total - ref) / scale
        rows.append((i, k, s, abs(sp.I1), abs(sp.I2), abs(sp.I3), err, p["tol"], bool(err <= p["tol"])))
    return Result(("pair", "k", "s", "abs_I1", "abs_I2", "abs_I3", "measured", "bound", "pass"),
                  rows, all(r[-1] for r in rows))


def lap_fields(grid: Grid, count: int, seed: int) -> list:
    """Gaussian bumps of width 0.6 to 0.8 with small random centres and complex amplitudes."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        sig = rng.uniform(0.6, 0.8)
        c = rng.uniform(-0.5, 0.5, size=grid.d)
        amp = rng.normal() + 1j * rng.normal()
        r2 = sum((grid.x[a] - c[a]) ** 2 for a in range(grid.d))
        out.append((sig, amp * np.exp(-r2 / (2 * sig ** 2))))
    return out


def lap_oracle_error(a: np.ndarray, grid: Grid, k: float, eta: float = 1.0) -> tuple:
    """(monotone increments, relative weighted L^2 error against the Green oracle on |x| < L)."""
    f = make_field(grid, a)
    res = limiting_apply(f, k, eta=eta)
    ref = green_convolve(f, k).values
    w = WeightSpec(eta, -1)(*grid.x) * (grid.r < grid.L)
    err = lp_norm_array(res.field.values - ref, 2, grid.cell, w) / lp_norm_array(ref, 2, grid.cell, w)
    return res.monotone, float(err)


def run_lap_check(cfg: RunConfig) -> Result:
    grid, p = cfg.grid, cfg.params
    rows = []
    for i, (sig, a) in enumerate(lap_fields(grid, p["samples"], _field_seed(cfg.seed, 0))):
        mono, err = lap_oracle_error(a, grid, p["k"])
        rows.append((i, p["k"], sig, mono, err, p["tol"], bool(mono and err <= p["tol"])))
    return Result(("field", "k", "sigma", "monotone", "measured", "bound", "pass"), rows,
                  all(r[-1] for r in rows))


def _need_lists(p, *names):
    for n in names:
        if len(p[n]) == 0:
            raise ConfigError(f"{n} must not be empty")


def run_sweep_thmF(cfg: RunConfig) -> Result:
    p = cfg.params
    _need_lists(p, "k_list", "gamma_list", "s_list", "lam_list")
    t = sweep_thmF(cfg.grid, p["k_list"], p["gamma_list"], p["r"], p["s_list"], p["eta"], p["lam_list"],
                   p["samples"], cfg.seed, p["support"], p["factor"])
    return _table_result(t)


def run_sweep_Hsg(cfg: RunConfig) -> Result:
    p = cfg.params
    _need_lists(p, "k_list", "gamma_list", "lam_list")
    t = sweep_Hsg(cfg.grid, p["k_list"], p["gamma_list"], p["p1"], p["p2"], p["q"], p["r"], p["eta"],
                  p["lam_list"], p["samples"], cfg.seed, p["support"], p["factor"])
    return _table_result(t)


def run_sweep_PHLp(cfg: RunConfig) -> Result:
    p = cfg.params
    _need_lists(p, "k_list", "gamma_list")
    t = sweep_PHLp(cfg.grid, p["k_list"], p["gamma_list"], p["p0"], p["eta"], p["eps"], p["samples"],
                   cfg.seed, p["support"], p["factor"])
    return _table_result(t)


def run_scaling_sweep(cfg: RunConfig) -> Result:
    grid, p = cfg.grid, cfg.params
    _need_lists(p, "lam_list")
    rows, ok = [], True
    for i in range(p["fields"]):
        a = random_smooth_field(grid, _field_seed(cfg.seed, i), support=grid.L / 4)
        t = scaling_sweep(make_field(grid, a), p["lam_list"], p["r"], 2.0, 2.0, p["eta"], 1, p["factor"])
        for r in t.rows:
            rows.append(("envelope", i, r.params[0], r.measured, r.bound, r.quotient, r.passed))
        ok = ok and t.passed
    for j in p["shells"]:
        a = single_shell_field(grid, int(j), _field_seed(cfg.seed, 500 + int(j)))
        f = make_field(grid, a)
        for m in range(-2, 3):
            e = block_shift_error(f, m, 2.0, p["eta"])
            good = bool(e <= 1e-10)
            rows.append(("block_shift", int(j), 2.0 ** m, e, 1e-10, math.nan, good))
            ok = ok and good
    return Result(("check", "fixture", "lambda", "measured", "bound", "quotient", "pass"), rows, ok)


def _solver_config(p) -> SolverConfig:
    return SolverConfig(lam=p["lam"], gamma=p["gamma"], r=p["r"], eta0=p["eta0"], max_iter=p["max_iter"],
                        tol=p["tol"])


def solver_fixture(grid: Grid, p) -> object:
    """Source poly_bump(R) and real potential V = V_amp * poly_bump(R)."""
    R = p["R"]
    src = poly_bump(grid, R, p["source_amp"], m=8)
    rho = poly_bump(grid, R, p["V_amp"], m=8)
    return build_problem(grid, rho=rho, g=src, k=p["k"], R=R)


def run_solve(cfg: RunConfig) -> Result:
    grid, p = cfg.grid, cfg.params
    try:
        prob = solver_fixture(grid, p)
        conf = _solver_config(p)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    sol = solve(prob, conf)
    radii, prof = radiation_profile(sol.u, grid, prob.k, prob.R)
    decreasing = bool(prof.size < 2 or np.all(np.diff(prof) < 0))
    ok = bool(sol.converged and decreasing)
    if p["V_amp"] == 0:
        ok = ok and sol.iterations == 1
    row = (prob.k, prob.R, p["V_amp"], sol.lam, sol.iterations, sol.contraction, sol.fixed_point_residual,
           sol.pde_residual, sol.radiation_metric, decreasing, sol.converged, ok)
    return Result(("k", "R", "V_amp", "lambda", "iterations", "contraction", "fixed_point_residual",
                   "pde_residual", "radiation_metric", "radiation_decreasing", "converged", "pass"), [row], ok)


def run_dual_lambda_check(cfg: RunConfig) -> Result:
    grid, p = cfg.grid, cfg.params
    try:
        prob = solver_fixture(grid, p)
        conf = _solver_config(p)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    diff, s1, s2 = dual_lambda_check(prob, p["lam1"], p["lam2"], conf)
    ok = bool(diff <= p["bound"] and s1.converged and s2.converged)
    return Result(("lambda1", "lambda2", "measured", "bound", "pass"), [(p["lam1"], p["lam2"], diff, p["bound"], ok)],
                  ok)


def run_manufactured_check(cfg: RunConfig) -> Result:
    grid, p = cfg.grid, cfg.params
    _need_lists(p, "V_amp_list")
    rows = []
    conf = _solver_config(p)
    for i, amp in enumerate(p["V_amp_list"]):
        try:
            prob, ustar = manufactured_problem(grid, p["k"], p["R"], amp, _field_seed(cfg.seed, i))
        except ValueError as e:
            raise ConfigError(str(e)) from None
        sol = solve(prob, conf)
        err = float(np.abs(sol.u - ustar).max() / np.abs(ustar).max())
        good = bool(sol.converged and sol.pde_residual <= p["bound"])
        rows.append((amp, sol.iterations, sol.contraction, err, sol.pde_residual, p["bound"], good))
    return Result(("V_amp", "iterations", "contraction", "solution_error", "measured", "bound", "pass"), rows,
                  all(r[-1] for r in rows))


_SWEEP_COMMON = {"samples": (_int, 4), "support": (_float, 2.0), "factor": (_float, STABILITY)}
_SOLVER_COMMON = {"k": (_float, 2.0), "R": (_float, 1.0), "V_amp": (_float, 0.0), "source_amp": (_float, 1.0),
                  "gamma": (_vector, ()), "lam": (_float, 1.0), "r": (_float, 1.3), "eta0": (_float, 0.6),
                  "max_iter": (_int, 200), "tol": (_float, 1e-10)}
_K5 = (0.5, 1.0, 2.0, 4.0, 8.0)
_G2 = ((), (1.5, 0.0))

COMMANDS = {
    "partition-check": CommandSpec(run_partition_check,
                                   {"samples": (_int, 0), "band_fraction": (_float, 0.9), "tol": (_float, 1e-10)},
                                   lambda p: p["samples"] > 0),
    "besov-props": CommandSpec(run_besov_props,
                               {"samples": (_int, 10), "r": (_float, 0.5), "eta": (_float, 1.0), "s": (_float, 1.0),
                                "shell": (_int, 3), "factor": (_float, STABILITY)}),
    "paraproduct-check": CommandSpec(run_paraproduct_check,
                                     {"samples": (_int, 20), "tol": (_float, 1e-8),
                                      "cases": (_words, ("para_pos", "para_neg", "resonant")),
                                      "lam_list": (_floats, (1.0, 0.5, 0.25, 0.125)), "family": (_int, 4),
                                      "factor": (_float, STABILITY)}),
    "resolvent-apply": CommandSpec(run_resolvent_apply,
                                   {"k_list": (_floats, (0.5, 2.0, 8.0)), "gamma_list": (_vectors, _G2),
                                    "tau_list": (_floats, (0.1, 0.01)), "tol": (_float, 1e-10)}),
    "shell-split-check": CommandSpec(run_shell_split_check,
                                     {"samples": (_int, 10), "k_list": (_floats, (0.5, 2.0, 5.0)),
                                      "s_list": (_floats, (0.0, 2.0)), "gamma": (_vector, ()),
                                      "tol": (_float, 1e-6)}),
    "lap-check": CommandSpec(run_lap_check, {"samples": (_int, 10), "k": (_float, 2.0), "tol": (_float, 1e-4)}),
    "sweep-thmF": CommandSpec(run_sweep_thmF,
                              dict(_SWEEP_COMMON, k_list=(_floats, _K5), gamma_list=(_vectors, _G2),
                                   s_list=(_floats, (0.0, 2.0)), lam_list=(_floats, (1.0, 0.5, 0.25)),
                                   r=(_float, 0.0), eta=(_float, 1.0))),
    "sweep-Hsg": CommandSpec(run_sweep_Hsg,
                             dict(_SWEEP_COMMON, k_list=(_floats, _K5), gamma_list=(_vectors, _G2),
                                  lam_list=(_floats, (1.0, 0.5, 0.25)), p1=(_float, 4.0), p2=(_float, 2.0),
                                  q=(_float, 2.0), r=(_float, 0.5), eta=(_float, 1.1))),
    "sweep-PHLp": CommandSpec(run_sweep_PHLp,
                              dict(_SWEEP_COMMON, k_list=(_floats, _K5), gamma_list=(_vectors, _G2),
                                   p0=(_float, 1.5), eta=(_float, 1.0), eps=(_float, 0.1))),
    "scaling-sweep": CommandSpec(run_scaling_sweep,
                                 {"fields": (_int, 3), "lam_list": (_floats, tuple(2.0 ** m for m in range(-3, 4))),
                                  "r": (_float, 0.5), "eta": (_float, 1.0), "shells": (_floats, (2.0, 3.0)),
                                  "factor": (_float, STABILITY)}),
    "solve": CommandSpec(run_solve, dict(_SOLVER_COMMON), lambda p: False),
    "dual-lambda-check": CommandSpec(run_dual_lambda_check,
                                     dict(_SOLVER_COMMON, V_amp=(_float, 1.0), lam1=(_float, 1.0),
                                          lam2=(_float, 0.25), bound=(_float, 1e-4)), lambda p: False),
    "manufactured-check": CommandSpec(run_manufactured_check,
                                      dict(_SOLVER_COMMON, R=(_float, 1.9), V_amp_list=(_floats, (0.3, 1.0, 3.0)),
                                           bound=(_float, 1e-5))),
}


def run_command(cfg: RunConfig) -> tuple:
    """Run the configured command; returns (exit code, csv text, path written)."""
    try:
        res = COMMANDS[cfg.command].runner(cfg)
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(str(e)) from None
    text = format_csv(cfg, res)
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, f"{cfg.command}.csv")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return (0 if res.passed else 1), text, path


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="helmspec", description=__doc__.splitlines()[0])
    ap.add_argument("--config", required=True, help="INI config file")
    ap.add_argument("--out", help="output directory (overrides [run] out)")
    ap.add_argument("--threads", type=int, default=1, help="FFT worker threads (advisory)")
    ap.add_argument("--seed", type=int, help="seed override")
    args = ap.parse_args(argv)
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
        cfg = parse_config(text, seed=args.seed, out=args.out)
        set_fft_workers(max(1, args.threads))
        code, _, path = run_command(cfg)
    except (ConfigError, OSError, UnicodeDecodeError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    print(f"{'PASS' if code == 0 else 'FAIL'} {cfg.command} -> {path}")
    return code


if __name__ == "__main__":
    sys.exit(main())
