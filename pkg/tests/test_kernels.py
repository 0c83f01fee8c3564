import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from degenlab.calculus import decompose, heat
from degenlab.kernels import (classical_riesz_constant, fit_window, gaussian_fit, kernel_matrix,
                              kernel_slice, lattice_ball_mass, mass_bound, riesz_compare,
                              unit_ball_volume)
from degenlab.lattice import assemble, build_grid
from degenlab.weights import Weight


@pytest.fixture(scope="module")
def flat_periodic():
    op = assemble(build_grid(1, 1.0, 128, "periodic"), Weight.constant(1.0))
    return op, decompose(op)


@pytest.fixture(scope="module")
def flat256():
    op = assemble(build_grid(1, 1.0, 256), Weight.constant(1.0))
    return op, decompose(op)


@pytest.fixture(scope="module")
def half256():
    op = assemble(build_grid(1, 1.0, 256), Weight.power(0.5))
    return op, decompose(op)


@given(t=st.floats(1e-4, 1.0), seed=st.integers(0, 2 ** 16))
def test_kernel_reproduces_heat(half64, t, seed):
    op, dec = half64
    u = np.random.default_rng(seed).standard_normal(op.size)
    K = kernel_matrix(dec, t)
    assert np.allclose(K @ (u * op.mass), heat(dec, t, u), atol=1e-11 * np.max(np.abs(u)))


@given(t=st.floats(1e-4, 1.0), i=st.integers(0, 63), j=st.integers(0, 63))
def test_kernel_symmetric_and_nonnegative(half64, t, i, j):
    _, dec = half64
    a, b = kernel_slice(dec, t, j).values, kernel_slice(dec, t, i).values
    scale = max(np.max(np.abs(a)), 1.0)
    assert abs(a[i] - b[j]) <= 1e-10 * scale
    assert np.min(a) >= -1e-10 * scale


def test_coefficient_kernel_nonnegative():
    g = build_grid(1, 1.0, 64)
    op = assemble(g, Weight.power(-0.5), coeff=lambda x: 2 + np.sin(np.pi * x), bounds=(1, 3))
    dec = decompose(op)
    for t in (1e-3, 1e-2, 0.1):
        K = kernel_matrix(dec, t)
        assert np.min(K) >= -1e-10 * np.max(K)
        assert np.allclose(K, K.T, atol=1e-10 * np.max(K))


def test_periodic_conservation(half_periodic):
    _, dec = half_periodic
    for t in (1e-3, 0.05, 1.0):
        for j in (0, 17, 40):
            col = kernel_slice(dec, t, j).values
            assert np.sum(col * dec.mass) == pytest.approx(1.0, abs=1e-10)


def test_periodic_large_time_uniform(flat_periodic):
    _, dec = flat_periodic
    col = kernel_slice(dec, 50.0, 11).values
    assert np.max(np.abs(col - 1 / dec.mass.sum())) <= 1e-8


def test_continuum_image_sum_kernel(flat_periodic):
    op, dec = flat_periodic
    g = op.grid
    L = 2 * g.extent
    for t in (0.005, 0.02):
        j = g.points // 2
        col = kernel_slice(dec, t, j).values
        d = g.axis - g.axis[j]
        ref = sum(np.exp(-(d + k * L) ** 2 / (4 * t)) for k in range(-5, 6)) / math.sqrt(
            4 * math.pi * t)
        near = np.abs(d) <= 3 * math.sqrt(t)
        assert np.max(np.abs(col[near] / ref[near] - 1)) <= 0.05


def test_mass_bound_periodic_and_dirichlet(half_periodic, half64):
    ts = np.geomspace(1e-3, 0.1, 5)
    assert np.all(mass_bound(half_periodic[1], ts) <= 1 + 1e-8)
    assert np.all(mass_bound(half64[1], ts) <= 1 + 1e-8)


def test_slice_rejects_nonpositive_time(half64):
    with pytest.raises(ValueError):
        kernel_slice(half64[1], 0.0, 3)


def test_lattice_ball_mass_counts_nodes():
    g = build_grid(1, 1.0, 8)
    m = np.full(8, g.h)
    # node 3 sits at -0.125; radius 0.25 reaches nodes 2, 3, 4
    assert lattice_ball_mass(g, m, [3], [0.25])[0, 0] == pytest.approx(3 * g.h)


def test_flat_gaussian_decay_rate(flat256):
    _, dec = flat256
    fit = gaussian_fit(dec)
    assert 3.9 <= fit.c <= 8
    assert fit.C <= 2
    assert fit.lower_certified and fit.C_lower > 0 and fit.c_lower > 0


def test_denominators_interchangeable(half256):
    _, dec = half256
    fits = [gaussian_fit(dec, denominator=d) for d in ("max", "min", "geo")]
    Cs = np.array([f.C for f in fits])
    cs = np.array([f.c for f in fits])
    assert Cs.max() / Cs.min() <= 10 and cs.max() / cs.min() <= 10


def test_derivative_kernel_fit_finite(half256):
    fit = gaussian_fit(half256[1], derivative=1)
    assert math.isfinite(fit.C) and fit.C > 0 and fit.c > 0


def test_fit_needs_two_decades(half64):
    with pytest.raises(ValueError):
        gaussian_fit(half64[1], times=np.geomspace(1e-3, 5e-2, 4))


def test_fit_window_collapse():
    with pytest.raises(ValueError):
        fit_window(build_grid(1, 1.0, 8), lo=10, hi=0.1)


# -- Riesz --------------------------------------------------------------------

@pytest.mark.parametrize("n,alpha", [(1, 0.25), (1, 0.125), (2, 0.5), (2, 0.75)])
def test_classical_riesz_constant(n, alpha):
    ref = special.gamma(n / 2 - alpha) / (4 ** alpha * np.pi ** (n / 2) * special.gamma(alpha))
    assert classical_riesz_constant(n, alpha) == pytest.approx(ref, rel=1e-13)
    assert unit_ball_volume(n) == pytest.approx([2.0, np.pi][n - 1])


def test_riesz_zero_input(flat256):
    _, dec = flat256
    res = riesz_compare(dec, 0.25, Weight.constant(1.0), np.zeros(dec.size))
    assert res.band == (0.0, 0.0)


def test_riesz_preconditions(flat256, half_periodic):
    _, dec = flat256
    with pytest.raises(ValueError):
        riesz_compare(dec, 0.5, Weight.constant(1.0), np.ones(dec.size))
    with pytest.raises(ValueError):
        riesz_compare(dec, 0.25, Weight.constant(1.0), -np.ones(dec.size))
    with pytest.raises(ValueError):
        riesz_compare(half_periodic[1], 0.125, Weight.power(0.5), np.ones(64))
