import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from helmspec.grid import WeightSpec, lp_norm_array, make_field, make_grid
from helmspec.estimates import windowed_band_field
from helmspec.resolvents import (FaddeevParams, ShellCutoff, conjugation_residual, default_eps0, exchange_discrepancy,
                                 default_schedule, default_tau, direct_pairing, faddeev_operator_apply,
                                 green_convolve, green_kernel, green_kernel_general, inverse_residual,
                                 limiting_apply, outgoing_kappa, psi_profile, radial_green_convolve,
                                 regularized_apply, richardson_weights, shell_split_pairing, symbol_m,
                                 truncated_kernel_symbol)


def test_symbol_examples():
    assert symbol_m(np.zeros(2), FaddeevParams(1.0)) == -1
    assert symbol_m(np.array([1.0, 0.0]), FaddeevParams(1.0, (1.0, 0.0))) == -1 + 2j
    a = symbol_m(np.array([0.3, 0.4]), FaddeevParams(2.0, (1.2,)))
    b = symbol_m(np.array([0.3, 0.4]), FaddeevParams(2.0, (1.2,), 0.1))
    assert b - a == pytest.approx(-0.1j)


def test_params_and_defaults():
    p = FaddeevParams(2.0, (1.5, 0.0))
    assert p.r == pytest.approx(2.5)
    assert default_eps0(2.5) == pytest.approx(0.3125)
    assert default_tau(0.5) == 0.125
    assert default_eps0(8.0) == 0.5
    with pytest.raises(ValueError):
        FaddeevParams(0.0)
    s = default_schedule(p)
    assert len(s) == 8 and s[0] == pytest.approx(0.3125 ** 2 / 2)


def test_psi_profile():
    c = ShellCutoff(2.0, 0.4)
    assert c(2.0) == 1.0 and c(2.19) == 1.0
    assert c(2.4) == 0.0 and c(1.5) == 0.0
    assert psi_profile(0.75) == pytest.approx(0.5)


@pytest.mark.parametrize("tau", [0.3, -0.3, 1e-3])
def test_outgoing_kappa(tau):
    kap = outgoing_kappa(2.0, tau)
    assert kap * kap == pytest.approx(4.0 + 1j * tau)
    # decaying root; the real part carries the outgoing or incoming direction
    assert kap.imag > 0 and kap.real * np.sign(tau) > 0


def test_truncated_kernel_frozen_values():
    # frozen from 30-digit quadratures of the truncated outgoing kernel
    cases3 = [(1.3, 2 + 0.05j, 4.0, -0.918876057244647338 + 0.162014302149289562j),
              (0.0, 2 + 0.05j, 4.0, 1.35583198839625393 + 0.413723088713190907j),
              (3.0, 1 + 0.1j, 6.0, 0.0783169293517047470 - 0.00235076765639012522j)]
    for rho, kap, R, v in cases3:
        assert truncated_kernel_symbol(np.array([rho]), kap, R, 3)[0] == pytest.approx(v, rel=1e-10)
    cases2 = [(1.3, 2 + 0.05j, 4.0, -0.719509299102474092 + 0.119282605798028731j),
              (3.0, 1 + 0.1j, 6.0, 0.0206987416647767927 - 0.0512156019272298684j)]
    for rho, kap, R, v in cases2:
        assert truncated_kernel_symbol(np.array([rho]), kap, R, 2)[0] == pytest.approx(v, rel=1e-10)


def test_truncated_kernel_tends_to_inverse_symbol():
    kap = outgoing_kappa(1.5, 0.5)
    rho = np.array([0.2, 1.0, 2.7])
    v = truncated_kernel_symbol(rho, kap, 200.0, 3)
    assert np.allclose(v, 1.0 / (rho ** 2 - kap ** 2), rtol=1e-12)


def test_truncated_kernel_on_shell_is_finite():
    v = truncated_kernel_symbol(np.array([2.0, 2.0 + 1e-7]), complex(2.0, 0.0), 5.0, 3)
    assert np.all(np.isfinite(v))
    assert v[0] == pytest.approx(v[1], rel=1e-4)


def test_green_kernel_forms_agree():
    r = np.array([0.3, 1.0, 4.0])
    for d in (2, 3):
        assert np.allclose(green_kernel(r, 1.7, d), green_kernel_general(r, 1.7, d), rtol=1e-13)


def test_radial_oracle_frozen_values():
    g = lambda s: np.exp(-s ** 2 / (2 * 0.49))
    u = radial_green_convolve(g, 2.0, 3, np.array([0.5625, 1.875]), 8.0)
    assert u[0] == pytest.approx(-0.0711402239759480595 + 0.258796440666940218j, rel=1e-10)
    assert u[1] == pytest.approx(-0.0720459896686925588 - 0.0491820949397331620j, rel=1e-10)


def test_plane_wave_division():
    g = make_grid(2, 32, np.pi)
    p = FaddeevParams(1.3, (1.2, 0.0), 0.2)
    f = make_field(g, lambda x, y: np.exp(1j * (2 * x - y)))
    xi = np.array([2.0, -1.0])
    out = regularized_apply(f, p, s=2.0)
    assert np.allclose(out.values, f.values * 6.0 / symbol_m(xi, p), atol=1e-12)


@pytest.mark.parametrize("k,gamma,tau", [(0.5, (), 0.1), (2.0, (1.5, 0.0), 0.01), (8.0, (0.0, 1.5), -0.05)])
def test_two_sided_inverse(k, gamma, tau):
    g = make_grid(2, 128, 8.35)
    f = make_field(g, windowed_band_field(g, 5, 0.4 * g.xi_nyquist, 0.5 * g.xi_nyquist))
    left, right = inverse_residual(f, FaddeevParams(k, gamma, tau))
    assert left < 1e-10 and right < 1e-10


def test_regularized_apply_rejects():
    g = make_grid(2, 16, 2.0)
    f = make_field(g, 1.0)
    with pytest.raises(ValueError):
        regularized_apply(f, FaddeevParams(1.0))
    with pytest.raises(ValueError):
        regularized_apply(f, FaddeevParams(1.0, (), 0.1), s=3.0)
    with pytest.raises(ValueError):
        regularized_apply(f, FaddeevParams(1.0, (1.5,), 0.1), domain="free")


def test_gamma_zero_reduces_to_free_symbol():
    g = make_grid(2, 32, 4.0)
    rng = np.random.default_rng(0)
    f = make_field(g, rng.normal(size=g.shape))
    a = regularized_apply(f, FaddeevParams(1.0, (), 0.3)).values
    b = regularized_apply(f, FaddeevParams(1.0, (0.0, 0.0), 0.3)).values
    assert np.array_equal(a, b)


def test_richardson_weights_exact_on_cubics():
    t = (0.4, 0.2, 0.1, 0.05)
    w = richardson_weights(t, 3)
    assert sum(w) == pytest.approx(1.0)
    vals = [2.0 + 3 * s - s ** 2 + 0.5 * s ** 3 for s in t]
    assert np.dot(w, vals) == pytest.approx(2.0, abs=1e-12)


def test_conjugation_identity():
    g = make_grid(2, 128, 6.0)
    f = make_field(g, np.exp(-g.r ** 2))
    assert conjugation_residual(f, 1.0, (1.5, 0.0)) < 1e-9
    # the opposite exponential leaves an order-one residual
    assert conjugation_residual(f, 1.0, (1.5, 0.0), drift_sign=1) > 0.5


def gaussian3(g, s, c=(0.0, 0.0, 0.0)):
    return np.exp(-sum((g.x[a] - c[a]) ** 2 for a in range(3)) / (2 * s ** 2))


def test_green_convolve_matches_radial_oracle():
    g = make_grid(3, 64, 6.0)
    s = 0.7
    a = gaussian3(g, s)
    u = green_convolve(make_field(g, a), 2.0).values
    c = g.N // 2
    i1, i2 = c + 3, c + 10
    # lattice radii 0.5625 and 1.875 on the x1 axis
    assert g.x1d[i1] == 0.5625 and g.x1d[i2] == 1.875
    assert u[i1, c, c] == pytest.approx(-0.0711402239759480595 + 0.258796440666940218j, rel=1e-7)
    assert u[i2, c, c] == pytest.approx(-0.0720459896686925588 - 0.0491820949397331620j, rel=1e-7)


def test_limiting_apply_matches_green_oracle():
    g = make_grid(3, 64, 6.0)
    f = make_field(g, gaussian3(g, 0.65, (0.3, -0.2, 0.1)))
    res = limiting_apply(f, 1.5)
    assert res.monotone
    ref = green_convolve(f, 1.5).values
    w = WeightSpec(1.0, -1)(*g.x) * (g.r < g.L)
    err = lp_norm_array(res.field.values - ref, 2, g.cell, w) / lp_norm_array(ref, 2, g.cell, w)
    assert err < 1e-4
    # incoming limit is the complex conjugate kernel
    neg = limiting_apply(f, 1.5, sign=-1).field.values
    assert lp_norm_array(neg - np.conj(ref), 2, g.cell, w) / lp_norm_array(ref, 2, g.cell, w) < 1e-4
    with pytest.raises(ValueError):
        limiting_apply(f, 1.5, sign=1, schedule=(-0.1, -0.05))


def test_green_oracle_cell_method_is_less_accurate():
    g = make_grid(3, 64, 6.0)
    f = make_field(g, gaussian3(g, 0.7))
    a = green_convolve(f, 2.0, "subtract4").values
    b = green_convolve(f, 2.0, "cell").values
    rel = np.linalg.norm(a - b) / np.linalg.norm(a)
    assert 1e-4 < rel < 1e-2


def test_shell_split_matches_direct_pairing():
    g = make_grid(2, 128, 6.0)
    f = make_field(g, windowed_band_field(g, 1, 3.0, 4.0, 0.7))
    h = make_field(g, windowed_band_field(g, 2, 3.0, 4.0, 0.7))
    p = FaddeevParams(2.0)
    p = p.with_tau(default_tau(default_eps0(p.r)))
    sp = shell_split_pairing(f, h, p, s=2.0)
    ref = direct_pairing(f, h, p, s=2.0)
    scale = lp_norm_array(f.values, 2, g.cell) * lp_norm_array(h.values, 2, g.cell) * (1 + p.r ** 2)
    assert abs(sp.total - ref) / scale < 1e-6
    assert abs(sp.I2) > 0 and abs(sp.I1) > 0
    with pytest.raises(ValueError):
        shell_split_pairing(f, h, p.with_tau(1.0))


@settings(max_examples=10, deadline=None)
@given(st.floats(0.3, 6.0), st.floats(0.01, 0.5))
def test_truncated_kernel_quadrature_oracle(rho, tau):
    # direct quadrature of int_0^R e^{i kappa r} sin(rho r)/rho dr in 3D
    kap = outgoing_kappa(1.7, tau)
    R = 5.0
    re = integrate.quad(lambda r: (np.exp(1j * kap * r) * np.sin(rho * r) / rho).real, 0, R, limit=400)[0]
    im = integrate.quad(lambda r: (np.exp(1j * kap * r) * np.sin(rho * r) / rho).imag, 0, R, limit=400)[0]
    v = truncated_kernel_symbol(np.array([rho]), kap, R, 3)[0]
    assert abs(v - (re + 1j * im)) <= 1e-8 * max(1.0, abs(v))


def test_faddeev_operator_on_plane_wave():
    g = make_grid(2, 32, np.pi)
    p = FaddeevParams(1.0, (1.2, 0.0), 0.1)
    f = make_field(g, lambda x, y: np.exp(1j * (x + 2 * y)))
    out = faddeev_operator_apply(f, p).values
    assert np.allclose(out, symbol_m(np.array([1.0, 2.0]), p) * f.values, atol=1e-11)


def test_kernel_closed_form_3d():
    assert abs(green_kernel(np.array([1.0]), 1.0, 3)[0] - np.exp(1j) / (4 * np.pi)) < 1e-15


def test_point_mass_reproduces_kernel():
    grid = make_grid(3, 32, 4.0)
    r = np.broadcast_to(grid.r, grid.shape)
    a = np.zeros(grid.shape)
    a[np.unravel_index(np.argmin(r), grid.shape)] = 1 / grid.cell
    u = green_convolve(make_field(grid, a), 1.0, method="cell").values
    m = (r > 0.5) & (r < 3)
    G = green_kernel(r[m], 1.0, 3)
    assert np.max(np.abs(u[m] - G)) / np.max(np.abs(G)) < 1e-12


def _gauss2d():
    grid = make_grid(2, 128, 8.0)
    return make_field(grid, np.exp(-grid.r ** 2))


def test_limit_independent_of_schedule():
    f = _gauss2d()
    e = default_eps0(FaddeevParams(2.0, ()).r)
    a = limiting_apply(f, 2.0).field.values
    b = limiting_apply(f, 2.0, schedule=tuple(0.6 * e ** 2 * 2.0 ** -n for n in range(2, 10))).field.values
    assert np.linalg.norm(a - b) / np.linalg.norm(a) < 1e-4


def test_incoming_and_outgoing_differ():
    f = _gauss2d()
    a = limiting_apply(f, 2.0, sign=1).field.values
    b = limiting_apply(f, 2.0, sign=-1).field.values
    assert np.linalg.norm(a - b) / np.linalg.norm(a) > 0.5
    # real data: the incoming limit is the complex conjugate
    assert np.linalg.norm(b - np.conj(a)) / np.linalg.norm(a) < 1e-12


def test_exchange_discrepancy_is_order_one():
    # the drift limit is not a conjugate of the free outgoing limit
    d = exchange_discrepancy(_gauss2d(), 2.0, (1.5, 0.0), 1.0)
    assert np.isfinite(d) and 0.1 < d < 10
