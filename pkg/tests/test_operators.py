import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from bie2d import testcases
from bie2d.config import windowed_cosine
from bie2d.discretization import make_uniform_grid
from bie2d.errors import CoincidentPoints, CompatibilityViolation, DegenerateInterface, IndexMismatch
from bie2d.geometry import Circle, Ellipse, build_region_tree, curve_geometry
from bie2d.operators import (SystemContext, apply_system, assemble_dense, assemble_rhs, kernel_K, kernel_K_diag)
from bie2d.summation import DIRECT, Backend, direct_sum, layer_potential_sum


def test_kernel_value_at_quarter_turn():
    np.testing.assert_allclose(kernel_K([1.0, 0.0], [1.0, 0.0], [0.0, 1.0]), 1 / (4 * np.pi), rtol=1e-15)


@given(st.floats(0.1, 5.0), st.floats(0, 2 * np.pi), st.floats(0.01, 2 * np.pi - 0.01))
def test_kernel_is_constant_on_a_circle(R, t, dt):
    x = R * np.array([np.cos(t), np.sin(t)])
    y = R * np.array([np.cos(t + dt), np.sin(t + dt)])
    np.testing.assert_allclose(kernel_K(x, x / R, y), 1 / (4 * np.pi * R), rtol=1e-9)


def test_kernel_vanishes_for_orthogonal_normal():
    assert kernel_K([0.0, 0.0], [0.0, 1.0], [1.0, 0.0]) == 0.0


def test_kernel_rejects_coincident_points():
    with pytest.raises(CoincidentPoints):
        kernel_K([0.3, 0.1], [1.0, 0.0], [0.3, 0.1])


def test_diagonal_limit():
    t = 1e-3
    x, y = np.array([1.0, 0.0]), np.array([np.cos(t), np.sin(t)])
    np.testing.assert_allclose(kernel_K(x, x, y), kernel_K_diag(1.0), rtol=1e-6)
    g = curve_geometry(Ellipse((0, 0), (2.0, 1.0)), np.array([0.1, 0.1 + 1e-6]))
    np.testing.assert_allclose(kernel_K(g.point[0], g.normal[0], g.point[1]), kernel_K_diag(g.curvature[0]),
                               rtol=1e-5)
    assert kernel_K_diag(0.0) == 0.0
    np.testing.assert_allclose(kernel_K_diag(0.5), 1 / (8 * np.pi))


@pytest.mark.parametrize("y, expected", [((0.3, -0.2), 1.0), ((1.7, 0.4), 0.0)])
def test_kernel_integral_identity_off_curve(y, expected):
    g = make_uniform_grid(Circle((0, 0), 1.0), 128)
    np.testing.assert_allclose(g.weights @ kernel_K(g.points, g.normals, np.array(y)), expected, atol=1e-10)


def _ctx(curves, sigma, M, rescale=True, backend=DIRECT):
    tree = build_region_tree(curves, sigma)
    return SystemContext(tree, tuple(make_uniform_grid(c, M) for c in tree.curves), rescale, backend)


def test_zero_density_maps_to_zero():
    ctx = _ctx([Circle((0, 0), 1.0), Circle((0, 0), 0.4)], [1, 2], 16)
    assert np.all(apply_system(ctx, np.zeros(ctx.size)) == 0)


def test_constant_density_on_unit_circle():
    ctx = _ctx([Circle((0, 0), 1.0)], [1.0], 64)
    np.testing.assert_allclose(apply_system(ctx, np.ones(64)), -2 * np.pi, atol=1e-12)
    np.testing.assert_allclose(assemble_dense(ctx) @ np.ones(64), -2 * np.pi, atol=1e-12)


@pytest.mark.parametrize("rescale", [True, False])
def test_apply_matches_dense_assembly(rescale, rng):
    cfg = testcases.six_region_layout()
    ctx = _ctx(cfg.curves, cfg.sigma, 32, rescale)
    x = rng.normal(size=ctx.size)
    y = apply_system(ctx, x)
    np.testing.assert_allclose(y, assemble_dense(ctx) @ x, rtol=0, atol=1e-12 * np.abs(y).max())


def test_rescaled_system_is_the_scaled_unrescaled_system():
    cfg = testcases.six_region_layout()
    A = assemble_dense(_ctx(cfg.curves, cfg.sigma, 16, True))
    ctx_u = _ctx(cfg.curves, cfg.sigma, 16, False)
    B = assemble_dense(ctx_u)
    ctx_r = _ctx(cfg.curves, cfg.sigma, 16, True)
    row = np.where(ctx_r.is_root, 1.0 / ctx_r.tree.sigma[ctx_r.tree.root],
                   ctx_r.rhs_scale[ctx_r.iface])
    col = ctx_r.alpha[ctx_r.iface]
    np.testing.assert_allclose(row[:, None] * B * col[None, :], A, atol=1e-13)


@given(st.floats(0.05, 20.0), st.floats(0.05, 20.0))
def test_diagonal_factor_forms_agree(sp, si):
    if abs(sp - si) < 1e-3 * max(sp, si):
        return
    alpha = 1 - sp / si
    np.testing.assert_allclose(0.5 * alpha * (sp + si) / (sp - si), -0.5 * (sp + si) / si, rtol=1e-13)


def test_equal_conductivities_rejected():
    with pytest.raises(DegenerateInterface):
        _ctx([Circle((0, 0), 1.0), Circle((0, 0), 0.4)], [2, 2], 16)


def test_wrong_vector_length_rejected():
    ctx = _ctx([Circle((0, 0), 1.0)], [1.0], 16)
    with pytest.raises(IndexMismatch):
        apply_system(ctx, np.zeros(15))


def test_rhs_samples_and_zero_inner_block():
    ctx = _ctx([Circle((0, 0), 1.0), Circle((0, 0), 0.4)], [1, 2], 32)
    rhs = assemble_rhs(ctx, [lambda q, p: np.sin(3 * 2 * np.pi * q), None])
    q = ctx.grids[0].q
    np.testing.assert_allclose(rhs[:32], np.sin(6 * np.pi * q), atol=1e-15)
    assert np.all(rhs[32:] == 0)


def test_windowed_cosine_integrates_to_zero():
    g = make_uniform_grid(Circle((0, 0), 1.0), 512)
    b = windowed_cosine()
    assert abs(g.weights @ b(g.q, g.points)) <= 1e-12
    val, _ = integrate.quad(lambda t: b(np.array([t / (2 * np.pi)]), None)[0], 0, 2 * np.pi,
                            points=[np.pi / 2 - np.pi / 12, np.pi / 2 + np.pi / 12,
                                    3 * np.pi / 2 - np.pi / 12, 3 * np.pi / 2 + np.pi / 12], limit=200)
    assert abs(val) <= 1e-12


def test_incompatible_data_rejected():
    ctx = _ctx([Circle((0, 0), 1.0)], [1.0], 32)
    with pytest.raises(CompatibilityViolation):
        assemble_rhs(ctx, [lambda q, p: 1.0 + np.sin(2 * np.pi * q)])


def test_single_source_log_kernel():
    v = layer_potential_sum(np.array([[0.0, 0.0]]), np.array([1.0]), np.array([[np.e, 0.0]]), "G")
    np.testing.assert_allclose(v, 1 / (2 * np.pi), rtol=1e-15)


def test_uniform_circle_exterior_potential():
    g = make_uniform_grid(Circle((0, 0), 1.0), 256)
    v = layer_potential_sum(g.points, g.weights, np.array([[2.0, 0.0], [0.0, -2.0]]), "G")
    np.testing.assert_allclose(v, np.log(2.0), atol=1e-12)


@pytest.mark.parametrize("kernel", ["G", "K"])
def test_fmm_agrees_with_direct(kernel, rng):
    n = 10_000
    src = rng.uniform(-1, 1, size=(n, 2))
    tgt = rng.uniform(-1, 1, size=(n, 2))
    c = rng.normal(size=n)
    nrm = rng.normal(size=(n, 2))
    nrm /= np.hypot(*nrm.T)[:, None]
    ref = direct_sum(src, c, tgt, kernel, nrm)
    got = layer_potential_sum(src, c, tgt, kernel, nrm, Backend("fmm", 1e-9), force_fmm=True)
    assert np.abs(got - ref).max() <= 1e-9


def test_direct_sum_independent_of_thread_count(rng):
    src, tgt = rng.normal(size=(500, 2)), rng.normal(size=(300, 2))
    c = rng.normal(size=500)
    a = direct_sum(src, c, tgt, "G", threads=1)
    b = direct_sum(src, c, tgt, "G", threads=4)
    assert np.array_equal(a, b)
