import math
import warnings

import numpy as np
import pytest
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate
from scipy import linalg as sla

from degenlab.calculus import (CalderonScheme, SpectralFunction, TruncationWarning,
                               ZeroModeWarning, calderon_inverse_power, calderon_truncated,
                               decompose, heat, psi_calculus, spectral_apply)
from degenlab.kernels import kernel_matrix
from degenlab.lattice import assemble, build_grid, weighted_inner
from degenlab.norms import MeasureSpec, lp_norm
from degenlab.weights import Weight

ALPHAS = [0.125, 0.25, 0.5, 1.0]


def wnorm(u, dec):
    return math.sqrt(np.sum(u ** 2 * dec.mass))


# -- decomposition ------------------------------------------------------------

@pytest.mark.parametrize("N", [16, 64, 256])
def test_dirichlet_eigenvalues_closed_form(N):
    g = build_grid(1, 1.0, N)
    dec = decompose(assemble(g, Weight.constant(1.0)))
    k = np.arange(1, N + 1)
    ref = 4 / g.h ** 2 * np.sin(k * np.pi / (2 * (N + 1))) ** 2
    assert np.max(np.abs(dec.eigenvalues - ref) / ref) <= 1e-9


def test_decomposition_invariants(half64):
    op, dec = half64
    chk = dec.check(op.symmetrized())
    assert chk["orthonormality"] <= 1e-10
    assert chk["reconstruction"] <= 1e-10
    assert np.all(np.diff(dec.eigenvalues) >= 0) and dec.eigenvalues[0] > 0


def test_modes_orthonormal_in_weighted_product(half64):
    op, dec = half64
    W = dec.modes
    G = W.T @ (W * op.mass[:, None])
    assert np.allclose(G, np.eye(op.size), atol=1e-10)


def test_periodic_constant_mode(half_periodic):
    op, dec = half_periodic
    assert dec.zero_modes == 1 and dec.eigenvalues[0] == 0.0
    v = dec.modes[:, 0]
    assert np.max(np.abs(v / v[0] - 1)) <= 1e-10


def test_coefficient_two_doubles_spectrum():
    g = build_grid(1, 1.0, 32)
    a = decompose(assemble(g, Weight.constant(1.0)))
    b = decompose(assemble(g, Weight.constant(1.0), coeff=2.0))
    assert np.allclose(b.eigenvalues, 2 * a.eigenvalues, rtol=1e-12)


# -- spectral functions -------------------------------------------------------

def test_heat_zero_is_identity(half64, rng):
    _, dec = half64
    u = rng.standard_normal(dec.size)
    assert np.allclose(heat(dec, 0.0, u), u, atol=1e-12)
    assert np.allclose(spectral_apply(dec, SpectralFunction.bounded("one"), u), u, atol=1e-12)


def test_power_on_eigenvector(half64):
    _, dec = half64
    for k in (0, 5, 40):
        v = dec.modes[:, k]
        out = spectral_apply(dec, SpectralFunction.power(-0.25), v)
        assert np.allclose(out, dec.eigenvalues[k] ** -0.25 * v, atol=1e-12 * np.max(np.abs(v)))


@given(s=st.floats(0, 0.5), t=st.floats(0, 0.5), seed=st.integers(0, 2 ** 16))
def test_semigroup_law(half64, s, t, seed):
    _, dec = half64
    u = np.random.default_rng(seed).standard_normal(dec.size)
    a = heat(dec, s, heat(dec, t, u))
    b = heat(dec, s + t, u)
    assert np.max(np.abs(a - b)) <= 1e-11 * max(1.0, np.max(np.abs(u)))


@given(t=st.floats(0, 2), seed=st.integers(0, 2 ** 16))
def test_heat_contraction(half64, t, seed):
    _, dec = half64
    u = np.random.default_rng(seed).standard_normal(dec.size)
    assert wnorm(heat(dec, t, u), dec) <= wnorm(u, dec) * (1 + 1e-12)


@given(seed=st.integers(0, 2 ** 16),
       pair=st.permutations([SpectralFunction.heat(0.01), SpectralFunction.power(-0.3),
                             SpectralFunction.bounded("ratio"), SpectralFunction.step4(4.0, 2),
                             SpectralFunction.heat_derivative(0.02, 1)]))
def test_commutativity(half64, seed, pair):
    _, dec = half64
    f, g = pair[0], pair[1]
    u = np.random.default_rng(seed).standard_normal(dec.size)
    a = spectral_apply(dec, f, spectral_apply(dec, g, u))
    b = spectral_apply(dec, g, spectral_apply(dec, f, u))
    assert np.max(np.abs(a - b)) <= 1e-11 * max(1.0, np.max(np.abs(a)))


def test_heat_matches_sparse_exponential(half64, rng):
    op, dec = half64
    u = rng.standard_normal(op.size)
    L = sp.diags(1 / op.mass) @ op.stiffness
    for t in (1e-4, 1e-2, 0.3):
        ref = spla.expm_multiply(-t * L, u)
        assert np.max(np.abs(heat(dec, t, u) - ref)) <= 1e-9 * np.max(np.abs(u))


def test_heat_limits_periodic(half_periodic, rng):
    op, dec = half_periodic
    u = rng.standard_normal(op.size)
    mean = weighted_inner(u, np.ones(op.size), op) / weighted_inner(
        np.ones(op.size), np.ones(op.size), op)
    out = heat(dec, 1e4, u)
    assert np.max(np.abs(out - mean)) <= 1e-8


def test_heat_decays_dirichlet(half64, rng):
    _, dec = half64
    u = rng.standard_normal(dec.size)
    assert np.max(np.abs(heat(dec, 200.0, u))) <= 1e-12 * np.max(np.abs(u))


def test_heat_sup_norm_bound(half64):
    _, dec = half64
    for t in (1e-3, 1e-2, 0.1, 1.0):
        K = kernel_matrix(dec, t)
        assert np.max(np.sum(np.abs(K) * dec.mass[None, :], axis=1)) <= 1.05


def test_negative_time_rejected(half64):
    with pytest.raises(ValueError):
        heat(half64[1], -1.0, np.ones(64))


def test_negative_power_needs_projection(half_periodic, rng):
    _, dec = half_periodic
    u = rng.standard_normal(dec.size)
    with pytest.raises(ValueError):
        spectral_apply(dec, SpectralFunction.power(-0.5), u)
    with pytest.warns(ZeroModeWarning):
        out = spectral_apply(dec, SpectralFunction.power(-0.5), u, zero_mode="project")
    assert np.all(np.isfinite(out))


@pytest.mark.parametrize("order", [1, 2])
@pytest.mark.parametrize("p", [1, 2, 4])
def test_step4_approximates_identity(half64, order, p, rng):
    op, dec = half64
    mu = MeasureSpec.weighted().on_operator(op)
    u = rng.standard_normal(op.size)
    errs = [lp_norm(spectral_apply(dec, SpectralFunction.step4(ell, order), u) - u, p, mu)
            for ell in (2.0, 16.0, 256.0, 1e5, 1e12)]
    assert all(b <= a for a, b in zip(errs, errs[1:]))
    assert errs[-1] <= 1e-6 * lp_norm(u, p, mu)


def test_step4_scalar_matches_integral():
    f = SpectralFunction.step4(8.0, 2)
    for z in (0.1, 1.0, 30.0):
        ref, _ = integrate.quad(lambda t: (t * z) ** 2 * math.exp(-t * z) / t, 1 / 8, 8)
        assert f.fn(np.array([z]))[0] == pytest.approx(ref, rel=1e-10)


def test_spectral_function_config_roundtrip():
    for f in (SpectralFunction.heat(0.3), SpectralFunction.power(-0.25),
              SpectralFunction.bounded("ratio"), SpectralFunction.step4(4.0, 2)):
        g = SpectralFunction.from_config(f.to_config())
        lam = np.geomspace(1e-2, 1e3, 7)
        assert np.allclose(f.fn(lam), g.fn(lam), rtol=1e-15)


# -- Calderon route -----------------------------------------------------------

@pytest.mark.parametrize("alpha", ALPHAS)
def test_scalar_calderon_identity(alpha):
    # Gamma(alpha) lam^{-alpha} = int t^{alpha-1} e^{-t lam} dt, by adaptive quadrature
    for lam in (0.3, 2.0, 50.0):
        ref, _ = integrate.quad(lambda t: t ** (alpha - 1) * math.exp(-t * lam), 0, np.inf,
                                limit=400)
        assert ref / math.gamma(alpha) == pytest.approx(lam ** -alpha, rel=1e-8)


@pytest.mark.parametrize("alpha", ALPHAS)
def test_calderon_matches_spectral_on_eigenvectors(half64, alpha):
    _, dec = half64
    sch = CalderonScheme.for_spectrum(alpha, dec.lambda_min, dec.lambda_max, 400)
    for k in (0, 7, 63):
        v = dec.modes[:, k]
        out = calderon_inverse_power(dec, sch, v)
        ref = dec.eigenvalues[k] ** -alpha * v
        assert wnorm(out - ref, dec) <= 1e-6 * wnorm(ref, dec)


def test_calderon_with_independent_heat_flow(half64, rng):
    # the route needs only heat(t, .) and u -> Lu; feed it a dense matrix exponential
    op, dec = half64
    L = (sp.diags(1 / op.mass) @ op.stiffness).toarray()
    u = rng.standard_normal(op.size)
    alpha = 0.25
    sch = CalderonScheme.for_spectrum(alpha, dec.lambda_min, dec.lambda_max, 400)
    out = calderon_inverse_power(lambda t, v: sla.expm(-t * L) @ v, sch, u,
                                 apply_L=lambda v: L @ v, adaptive=False,
                                 lam_bounds=(dec.lambda_min, dec.lambda_max))
    ref = spectral_apply(dec, SpectralFunction.power(-alpha), u)
    assert wnorm(out - ref, dec) <= 1e-6 * wnorm(ref, dec)


def test_calderon_alpha_one_is_linear_solve(flat64, rng):
    op, dec = flat64
    u = rng.standard_normal(op.size)
    ref = spla.spsolve(op.stiffness.tocsc(), op.mass * u)
    sch = CalderonScheme.for_spectrum(1.0, dec.lambda_min, dec.lambda_max, 400)
    out = calderon_inverse_power(dec, sch, u)
    assert wnorm(out - ref, dec) <= 1e-6 * wnorm(ref, dec)


def test_calderon_empty_interval_is_zero(half64, rng):
    _, dec = half64
    u = rng.standard_normal(dec.size)
    sch = CalderonScheme(0.5, 1.0, 1.0, 10)
    assert np.array_equal(calderon_truncated(dec, sch, u), np.zeros_like(u))


def test_calderon_truncation_warns(half64, rng):
    _, dec = half64
    sch = CalderonScheme(0.5, 1.0 / dec.lambda_max, 1.0 / dec.lambda_min, 50)
    with pytest.warns(TruncationWarning):
        calderon_inverse_power(dec, sch, rng.standard_normal(dec.size), adaptive=False)


def test_calderon_scheme_validation():
    with pytest.raises(ValueError):
        CalderonScheme(0.0, 1e-3, 1.0, 10)
    with pytest.raises(ValueError):
        CalderonScheme(0.5, 1.0, 1e-3, 10)
    with pytest.raises(ValueError):
        CalderonScheme(0.5, 1e-3, 1.0, 1)


def test_adaptive_doubling_converges(half64, rng):
    _, dec = half64
    sch = CalderonScheme.for_spectrum(0.5, dec.lambda_min, dec.lambda_max, 50)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        out, info = calderon_inverse_power(dec, sch, rng.standard_normal(dec.size),
                                           return_info=True)
    assert info["converged"]


# -- psi calculus -------------------------------------------------------------

def test_psi_identity(half64, rng):
    _, dec = half64
    u = rng.standard_normal(dec.size)
    alpha = 0.125
    phi = SpectralFunction.bounded("ratio")
    La = spectral_apply(dec, SpectralFunction.power(alpha), u)
    lhs = psi_calculus(dec, alpha, phi, La)
    rhs = spectral_apply(dec, phi, u)
    assert np.max(np.abs(lhs - rhs)) <= 1e-10 * np.max(np.abs(rhs))


def test_psi_reductions(half64, rng):
    _, dec = half64
    u = rng.standard_normal(dec.size)
    a = psi_calculus(dec, 0.25, SpectralFunction.bounded("one"), u)
    assert np.allclose(a, spectral_apply(dec, SpectralFunction.power(-0.25), u), atol=1e-12)
    b = psi_calculus(dec, 0.25, SpectralFunction.bounded("exp"), u)
    c = spectral_apply(dec, SpectralFunction.power(-0.25), heat(dec, 1.0, u))
    assert np.max(np.abs(b - c)) <= 1e-11 * max(1.0, np.max(np.abs(c)))


def test_psi_rejects_unbounded(half64):
    _, dec = half64
    with pytest.raises(ValueError):
        psi_calculus(dec, 0.25, SpectralFunction.power(0.5), np.ones(dec.size))
