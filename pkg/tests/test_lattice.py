import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from degenlab.lattice import (Grid, assemble, build_grid, export_coo, load_coo,
                              weighted_inner)
from degenlab.weights import Weight

weights_1d = st.sampled_from([Weight.constant(1.0), Weight.power(0.5), Weight.power(-0.5),
                              Weight.power(-0.9), Weight.power(1.7)])


def test_grid_geometry():
    g = build_grid(1, 1.0, 8)
    assert g.h == 0.25
    assert np.allclose(g.axis, -1 + (np.arange(8) + 0.5) * 0.25)
    assert not np.any(g.axis == 0)
    g2 = build_grid(2, 2.0, 8)
    assert g2.nodes.shape == (64, 2) and g2.cell_volume == pytest.approx(0.25)


def test_grid_rejects_odd_points():
    with pytest.raises(ValueError):
        Grid(1, 1.0, 7)


def test_unweighted_tridiagonal_stencil():
    op = assemble(build_grid(1, 1.0, 8), Weight.constant(1.0))
    h = op.grid.h
    ref = (2 * np.eye(8) - np.eye(8, k=1) - np.eye(8, k=-1)) / h
    assert np.allclose(op.stiffness.toarray(), ref, atol=1e-14)
    L = np.diag(1 / op.mass) @ op.stiffness.toarray()
    assert np.allclose(L, ref / h, atol=1e-12)


def test_constant_coefficient_doubles_operator():
    g = build_grid(2, 1.0, 8)
    w = Weight.constant(1.0, 2)
    a = assemble(g, w)
    b = assemble(g, w, coeff=2.0, bounds=(2.0, 2.0))
    assert np.allclose(b.stiffness.toarray(), 2 * a.stiffness.toarray(), atol=1e-13)


def test_operator_scaled_matches_constant_coefficient():
    g = build_grid(1, 1.0, 16)
    w = Weight.power(0.5)
    a = assemble(g, w).scaled(3.0)
    b = assemble(g, w, coeff=3.0, bounds=(3.0, 3.0))
    assert np.allclose(a.stiffness.toarray(), b.stiffness.toarray(), rtol=1e-14)


@given(w=weights_1d, seed=st.integers(0, 2 ** 16), bc=st.sampled_from(["dirichlet", "periodic"]))
def test_weighted_self_adjointness(w, seed, bc):
    op = assemble(build_grid(1, 1.0, 32, bc), w)
    rng = np.random.default_rng(seed)
    u, v = rng.standard_normal((2, op.size))
    lhs = weighted_inner(op.apply(u), v, op)
    rhs = weighted_inner(u, op.apply(v), op)
    scale = np.sqrt(weighted_inner(u, u, op) * weighted_inner(v, v, op)) * np.abs(
        op.stiffness).sum(axis=1).max() / op.mass.min()
    assert abs(lhs - rhs) <= 1e-12 * scale


def test_planar_self_adjointness_with_coefficient(rng):
    g = build_grid(2, 1.0, 16)
    coeff = (lambda x: 2 + np.sin(np.pi * x[:, 0]), lambda x: 1.5 + 0.5 * np.cos(x[:, 1]))
    op = assemble(g, Weight.power(-0.5, 2), coeff=coeff, bounds=(1.0, 3.0))
    S = op.stiffness.toarray()
    assert np.array_equal(S, S.T)
    u, v = rng.standard_normal((2, op.size))
    assert abs(op.form(u, v) - op.form(v, u)) <= 1e-12 * np.linalg.norm(S) * np.linalg.norm(
        u) * np.linalg.norm(v)


@given(w=weights_1d, seed=st.integers(0, 2 ** 16))
def test_form_nonnegative_and_kernel(w, seed):
    rng = np.random.default_rng(seed)
    d = assemble(build_grid(1, 1.0, 32), w)
    p = assemble(build_grid(1, 1.0, 32, "periodic"), w)
    u = rng.standard_normal(32)
    assert d.form(u) > 0
    assert p.form(u) >= -1e-12 * np.abs(p.stiffness).sum() * np.dot(u, u)
    one = np.ones(32)
    assert abs(p.form(one)) <= 1e-12 * np.abs(p.stiffness).sum()
    assert d.form(one) > 0


@given(seed=st.integers(0, 2 ** 16), nu=st.floats(0.2, 1.0), spread=st.floats(1.0, 5.0))
def test_coefficient_comparability(seed, nu, spread):
    g = build_grid(1, 1.0, 32)
    M = nu * spread
    rng = np.random.default_rng(seed)
    vals = rng.uniform(nu, M, size=8)
    a = lambda x: vals[np.clip(((x + 1) * 4).astype(int), 0, 7)]
    w = Weight.power(0.5)
    base = assemble(g, w)
    var = assemble(g, w, coeff=a, bounds=(nu, M))
    u = rng.standard_normal(32)
    f0, f1 = base.form(u), var.form(u)
    assert nu * f0 * (1 - 1e-12) <= f1 <= M * f0 * (1 + 1e-12)


def test_ellipticity_violation_rejected():
    g = build_grid(1, 1.0, 16)
    with pytest.raises(ValueError):
        assemble(g, Weight.constant(1.0), coeff=lambda x: 2 + np.sin(np.pi * x), bounds=(1.5, 3.0))
    with pytest.raises(ValueError):
        assemble(g, Weight.constant(1.0), coeff=-1.0)


def test_weighted_inner_examples(rng):
    op = assemble(build_grid(1, 1.0, 256), Weight.constant(1.0))
    one = np.ones(op.size)
    assert weighted_inner(one, one, op) == pytest.approx(2.0, abs=1e-12)
    u, v = rng.standard_normal((2, op.size))
    v = v - weighted_inner(u, v, op) / weighted_inner(u, u, op) * u
    assert abs(weighted_inner(u, v, op)) <= 1e-12 * np.sqrt(
        weighted_inner(u, u, op) * weighted_inner(v, v, op))
    with pytest.raises(ValueError):
        weighted_inner(one[:-1], one[:-1], op)


def test_weighted_total_mass_half_power():
    masses = [assemble(build_grid(1, 1.0, N), Weight.power(0.5)).mass.sum() for N in (64, 256, 1024)]
    err = np.abs(np.array(masses) - 4 / 3)
    assert err[-1] < 2e-3
    assert err[0] > err[1] > err[2]


def test_second_order_consistency():
    # u = exp(-8 x^2) is numerically zero at the boundary, so the Dirichlet
    # truncation plays no part and the error is the stencil's own.
    errs = []
    for N in (64, 128, 256):
        g = build_grid(1, 2.0, N)
        op = assemble(g, Weight.constant(1.0))
        x = g.axis
        u = np.exp(-8 * x ** 2)
        lap = (16 - 256 * x ** 2) * u
        errs.append(np.max(np.abs(op.apply(u) - lap)))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 1.8)


def test_planar_second_order_consistency():
    errs = []
    for N in (32, 64, 128):
        g = build_grid(2, 2.0, N)
        op = assemble(g, Weight.constant(1.0, 2))
        r2 = np.sum(g.nodes ** 2, axis=1)
        u = np.exp(-4 * r2)
        lap = (16 - 64 * r2) * u
        errs.append(np.max(np.abs(op.apply(u) - lap)))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 1.8)


def test_coo_roundtrip(tmp_path):
    op = assemble(build_grid(2, 1.0, 8), Weight.power(0.5, 2))
    path = tmp_path / "op.txt"
    export_coo(op, path)
    S, m = load_coo(path)
    assert np.array_equal(S.toarray(), op.stiffness.toarray())
    assert np.array_equal(m, op.mass)


def test_grid_refine_and_extend_keep_ratio():
    g = build_grid(1, 1.0, 16)
    assert g.refine().h == g.h / 2
    e = g.extend()
    assert e.h == g.h and e.extent == 2.0
