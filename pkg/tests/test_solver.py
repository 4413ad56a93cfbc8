import numpy as np
import pytest

from helmspec.grid import WeightSpec, lp_norm_array, make_field, make_grid
from helmspec.resolvents import green_convolve
from helmspec.solver import (SolverConfig, build_problem, contraction_factor, dual_lambda_check,
                             manufactured_problem, picard_solve, poly_bump, radiation_profile,
                             rescale_problem, solve, truncation_mismatch)

G2 = make_grid(2, 128, 8.0)


def test_build_problem_validation():
    with pytest.raises(ValueError):
        build_problem(G2, k=1.0, R=2.5)
    with pytest.raises(ValueError):
        build_problem(G2, g=np.exp(-G2.r ** 2), k=1.0, R=1.0)
    with pytest.raises(ValueError):
        build_problem(G2, k=0.0, R=1.0)
    p = build_problem(G2, eps=poly_bump(G2, 1.0), sigma=poly_bump(G2, 1.0), k=2.0, R=1.0)
    assert np.allclose(p.V, (4.0 + 2.0j) * poly_bump(G2, 1.0))


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(lam=0.0)
    with pytest.raises(ValueError):
        SolverConfig(gamma=(0.5, 0.0))
    with pytest.raises(ValueError):
        SolverConfig(gamma=(1.5, 0.0), eta0=0.4)
    assert SolverConfig(gamma=(1.5, 0.0)).gamma_norm == 1.5


def test_rescale_keeps_samples():
    p = build_problem(G2, rho=poly_bump(G2, 1.5), g=poly_bump(G2, 1.0), k=2.0, R=1.5)
    grid, V, g = rescale_problem(p, 0.25)
    assert grid.L == 32.0 and grid.N == G2.N
    assert np.array_equal(V, p.V)
    assert np.allclose(g, p.g / 16)


def test_zero_potential_one_step():
    g = make_grid(3, 64, 6.0)
    p = build_problem(g, g=poly_bump(g, 1.0, m=8), k=2.0, R=1.0)
    sol = solve(p)
    assert sol.iterations == 1 and sol.converged
    ref = -green_convolve(make_field(g, p.g), 2.0).values
    w = WeightSpec(1.0, -1)(*g.x) * (g.r < g.L)
    err = lp_norm_array(sol.u - ref, 2, g.cell, w) / lp_norm_array(ref, 2, g.cell, w)
    assert err < 1e-4
    radii, prof = radiation_profile(sol.u, g, 2.0, 1.0)
    assert radii.size >= 4
    assert np.all(np.diff(prof) < 0)


def test_manufactured_solution():
    p, ustar = manufactured_problem(G2, 2.0, 1.9, V_amp=1.0)
    sol = solve(p)
    assert sol.converged
    assert np.abs(sol.u - ustar).max() < 1e-6
    assert sol.pde_residual < 1e-5
    assert truncation_mismatch(sol, p, SolverConfig()) < 1e-8


def test_contraction_grows_with_potential():
    c = [contraction_factor(manufactured_problem(G2, 2.0, 1.9, V_amp=a)[0], SolverConfig()) for a in (0.3, 3.0)]
    assert c[0] < c[1] < 1


def test_dual_lambda():
    p, _ = manufactured_problem(G2, 2.0, 1.9, V_amp=0.5)
    diff, s1, s2 = dual_lambda_check(p, 1.0, 0.5)
    assert diff < 1e-4
    assert s1.lam == 1.0 and s2.lam == 0.5


def test_nonconvergent_potential_reports_failure():
    p, _ = manufactured_problem(G2, 2.0, 1.9, V_amp=40.0)
    sol = picard_solve(p, SolverConfig(max_iter=30, min_lam=0.25))
    assert not sol.converged
    assert [lam for lam, _ in sol.lam_history] == [1.0, 0.5, 0.25]
