import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helmspec.grid import WeightSpec, fftn, ifftn, lp_norm_array, make_field, make_grid
from helmspec.littlewood_paley import (DEFAULT_PAIR, BesovSpec, PartitionPair, besov_norm, blocks_array,
                                       check_weight_admissible, dyadic_block, jmax, lifting_apply,
                                       partial_sum, partition_residual)
from helmspec.estimates import single_shell_field

G = make_grid(2, 128, 8.0)


def test_profile_values():
    p = DEFAULT_PAIR
    assert p.chi(0.5) == 1.0
    assert p.phi(3.0) == 0.0
    # frozen from a 30-digit evaluation of the exp(-1/t) step
    assert p.chi(1.0) == pytest.approx(0.743962491324757977, rel=1e-13)
    assert p.phi(1.2) == pytest.approx(0.935030830871335938, rel=1e-13)
    total = p.chi(1.0) + sum(p.phi(2.0 ** -n) for n in range(21))
    assert abs(total - 1.0) < 1e-10


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 1e4))
def test_partition_of_unity_property(rho):
    p = DEFAULT_PAIR
    s = p.chi(rho) + sum(p.phi(rho / 2.0 ** n) for n in range(20))
    assert abs(s - 1.0) < 1e-12


def test_pair_validation():
    with pytest.raises(ValueError):
        PartitionPair(0.7, 1.2)
    with pytest.raises(ValueError):
        PartitionPair(0.8, 1.5)


def test_partition_residual_on_lattice():
    for g in (G, make_grid(3, 32, 4.0)):
        assert partition_residual(g) <= 1e-10


def test_reconstruction_random_band_limited():
    rng = np.random.default_rng(1)
    a = rng.normal(size=G.shape) + 1j * rng.normal(size=G.shape)
    a = ifftn(fftn(a) * (G.xi_abs < 0.8 * G.xi_nyquist))
    assert np.abs(sum(blocks_array(a, G)) - a).max() <= 1e-10 * np.abs(a).max()


def test_constant_field_blocks():
    f = make_field(G, 2.5)
    assert np.allclose(dyadic_block(f, -1).values, 2.5, atol=1e-13)
    for j in range(0, 4):
        assert np.abs(dyadic_block(f, j).values).max() < 1e-13


def test_single_shell_fixture():
    a = single_shell_field(G, 3, seed=2)
    f = make_field(G, a)
    assert np.abs(dyadic_block(f, 3).values - a).max() < 1e-12
    for j in (-1, 0, 1, 2, 4, 5):
        assert np.abs(dyadic_block(f, j).values).max() < 1e-12
    assert np.abs(partial_sum(f, 1).values).max() < 1e-12
    assert np.abs(partial_sum(f, -1).values).max() == 0.0
    assert np.abs(partial_sum(f, jmax(G) + 1).values - a).max() < 1e-12
    # one nonzero block: the norm is 2^{jr} ||f||
    for r, p in ((0.5, 2.0), (-1.0, 4.0)):
        nb = besov_norm(f, BesovSpec(r, p, 2.0, WeightSpec(1.0, -1)))
        expect = 2.0 ** (3 * r) * lp_norm_array(a, p, G.cell, WeightSpec(1.0, -1)(*G.x))
        assert nb == pytest.approx(expect, rel=1e-10)


def test_besov_zero_and_q_inf():
    assert besov_norm(make_field(G, 0.0), BesovSpec(1.0, 2.0, 2.0)) == 0.0
    rng = np.random.default_rng(3)
    f = make_field(G, rng.normal(size=G.shape) * np.exp(-G.r ** 2))
    n2 = besov_norm(f, BesovSpec(0.5, 2.0, 2.0))
    ninf = besov_norm(f, BesovSpec(0.5, 2.0, np.inf))
    assert ninf <= n2


def test_weight_and_lifting_equivalence():
    rng = np.random.default_rng(4)
    wr, lr = [], []
    w = WeightSpec(1.0, 1)(*G.x)
    for _ in range(6):
        a = ifftn(fftn(rng.normal(size=G.shape)) * (G.xi_abs < 10)) * np.exp(-G.r ** 2 / 4)
        f = make_field(G, a)
        wr.append(besov_norm(f, BesovSpec(0.5, 2, 2, WeightSpec(1.0, 1))) / besov_norm(make_field(G, a * w),
                                                                                      BesovSpec(0.5, 2, 2)))
        lr.append(besov_norm(lifting_apply(f, 1.0), BesovSpec(0.5, 2, 2)) / besov_norm(f, BesovSpec(1.5, 2, 2)))
    for v in (wr, lr):
        assert max(v) / min(v) < 5


def test_lifting_plane_wave_and_identity():
    g = make_grid(2, 32, np.pi)
    f = make_field(g, lambda x, y: np.exp(1j * (2 * x + y)))
    assert np.allclose(lifting_apply(f, 0.0).values, f.values)
    assert np.allclose(lifting_apply(f, 2.0).values, 6.0 * f.values, atol=1e-12)


def test_weight_admissibility():
    assert check_weight_admissible(lambda x: WeightSpec(1.5, 1)(*x.T), 1.5).passed
    assert check_weight_admissible(lambda x: WeightSpec(1.5, -1)(*x.T), 1.5).passed
    for eta in (1.0, 4.0, 10.0):
        rep = check_weight_admissible(lambda x: np.exp(np.linalg.norm(x, axis=1)), eta)
        assert not rep.passed
