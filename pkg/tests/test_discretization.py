import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.polynomial import legendre
from scipy import integrate

from bie2d.discretization import (fourier_tail, gauss_legendre, gauss_legendre_panel, interpolate_on_grid,
                                  lagrange_interpolate, legendre_tail, make_paneled_grid, make_uniform_grid,
                                  trig_interpolate, trig_shift)
from bie2d.errors import EmptyPanel
from bie2d.geometry import Circle, Ellipse


def test_unit_circle_weights_sum_to_circumference():
    np.testing.assert_allclose(make_uniform_grid(Circle((0, 0), 1.0), 16).weights.sum(), 2 * np.pi, rtol=1e-15)


def test_ellipse_weights_match_arclength_quadrature():
    e = Ellipse((0, 0), (2.0, 1.0))
    ref, _ = integrate.quad(lambda t: np.hypot(2 * np.sin(t), np.cos(t)), 0, 2 * np.pi, epsabs=1e-14, limit=200)
    np.testing.assert_allclose(make_uniform_grid(e, 64).weights.sum(), ref, rtol=1e-10)


def test_shifted_nodes_formula():
    np.testing.assert_allclose(make_uniform_grid(Circle((0, 0), 1.0), 3).q, [1 / 6, 1 / 2, 5 / 6])


def test_paneled_circle_length():
    g = make_paneled_grid(Circle((0, 0), 1.0), [0, 0.25, 0.5, 0.75], 16)
    np.testing.assert_allclose(g.weights.sum(), 2 * np.pi, rtol=1e-12)
    np.testing.assert_allclose(g.breaks, [0, 0.25, 0.5, 0.75, 1.0])


def test_two_point_rule_integrates_cubic():
    q, w = gauss_legendre_panel(0.0, 1.0, 2)
    np.testing.assert_allclose(w @ q**3, 0.25, rtol=1e-15)


@given(st.lists(st.floats(-0.04, 0.04), min_size=8, max_size=8), st.integers(0, 7))
def test_panel_split_preserves_total_weight(jitter, which):
    c = Ellipse((0, 0), (1.5, 0.8), 0.2)
    starts = list((np.arange(8) / 8 + np.array(jitter)) % 1.0)
    g = make_paneled_grid(c, starts, 16)
    p = which % g.n_panels
    a, b = g.breaks[p], g.breaks[p + 1]
    split = make_paneled_grid(c, sorted(starts + [0.5 * (a + b) % 1.0]), 16)
    np.testing.assert_allclose(split.weights.sum(), g.weights.sum(), rtol=1e-13)


def test_empty_panel_rejected():
    with pytest.raises(EmptyPanel):
        make_paneled_grid(Circle((0, 0), 1.0), [0.2, 0.2, 0.6], 8)


def test_trig_interpolate_band_limited():
    M = 9
    q = (np.arange(M) + 0.5) / M
    np.testing.assert_allclose(trig_interpolate(np.sin(2 * np.pi * q), 0.123), np.sin(2 * np.pi * 0.123), atol=1e-13)


def test_trig_interpolate_returns_node_values():
    M = 12
    q = (np.arange(M) + 0.5) / M
    f = np.exp(np.cos(2 * np.pi * q))
    assert trig_interpolate(f, q[3])[0] == f[3]


def test_trig_interpolate_self_convergence():
    def f(q):
        return np.exp(np.sin(2 * np.pi * q))

    v = [trig_interpolate(f((np.arange(M) + 0.5) / M), 0.377)[0] for M in (32, 64)]
    assert abs(v[0] - v[1]) <= 1e-10


@given(st.integers(1, 12).map(lambda k: 2 * k + 1), st.data())
def test_trig_interpolate_reproduces_trig_polynomials(M, data):
    K = (M - 1) // 2
    a = np.array(data.draw(st.lists(st.floats(-1, 1), min_size=K + 1, max_size=K + 1)))
    b = np.array(data.draw(st.lists(st.floats(-1, 1), min_size=K, max_size=K)))
    s = data.draw(st.floats(0.0, 0.99))
    x = np.array(data.draw(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=8)))

    def f(q):
        q = np.asarray(q)[..., None]
        k = np.arange(K + 1)
        return (a * np.cos(2 * np.pi * k * q)).sum(-1) + (b * np.sin(2 * np.pi * k[1:] * q)).sum(-1)

    nodes = (np.arange(M) + s) / M
    np.testing.assert_allclose(trig_interpolate(f(nodes), x, s), f(x), atol=1e-13)


@given(st.integers(4, 40), st.floats(-0.5, 0.5))
def test_trig_shift_matches_interpolant(M, delta):
    q = (np.arange(M) + 0.5) / M
    f = 1.0 / (1.3 - np.cos(2 * np.pi * q)) + np.sin(6 * np.pi * q)
    np.testing.assert_allclose(trig_shift(f, delta), trig_interpolate(f, q + delta), atol=1e-12)


def test_lagrange_quadratic():
    np.testing.assert_allclose(lagrange_interpolate([0, 0.5, 1], [0, 0.25, 1], 0.3), 0.09, rtol=1e-14)


def test_lagrange_at_node_is_exact():
    assert lagrange_interpolate([0.1, 0.4, 0.9], [3.0, -1.0, 2.0], 0.1)[0] == 3.0


def test_lagrange_on_gauss_nodes():
    q, _ = gauss_legendre_panel(0.0, 1.0, 16)
    np.testing.assert_allclose(lagrange_interpolate(q, np.cos(3 * q), 0.7), np.cos(2.1), atol=1e-12)


@given(st.integers(2, 14), st.data())
def test_lagrange_reproduces_polynomials(M, data):
    coef = np.array(data.draw(st.lists(st.floats(-1, 1), min_size=M, max_size=M)))
    t, _ = gauss_legendre(M)
    x = np.array(data.draw(st.lists(st.floats(-1, 1), min_size=1, max_size=8)))
    np.testing.assert_allclose(lagrange_interpolate(t, np.polynomial.polynomial.polyval(t, coef), x),
                               np.polynomial.polynomial.polyval(x, coef), atol=1e-12)


def test_lagrange_target_within_underflow_of_a_node():
    t, _ = gauss_legendre(3)  # middle node is exactly 0
    out = lagrange_interpolate(t, t**2 + 1, [2.2e-309, -5e-324])
    np.testing.assert_array_equal(out, [1.0, 1.0])


def test_paneled_grid_interpolation_matches_curve_data():
    c = Ellipse((0, 0), (1.5, 0.8))
    g = make_paneled_grid(c, [0.0, 0.3, 0.55, 0.8], 16)
    f = np.sin(2 * np.pi * g.q) ** 2
    x = np.linspace(0, 1, 37, endpoint=False)
    np.testing.assert_allclose(interpolate_on_grid(g, f, x), np.sin(2 * np.pi * x) ** 2, atol=1e-10)


def test_fourier_tail_band_limited():
    q = (np.arange(9) + 0.5) / 9
    t = fourier_tail(np.sin(2 * np.pi * q) + 0.5 * np.cos(4 * np.pi * q))
    assert t.size < 1e-14


@given(st.integers(1, 64), st.floats(-5, 5))
def test_fourier_tail_of_constant_vanishes(M, c):
    if M >= 3:
        assert fourier_tail(np.full(M, c)).size <= 1e-14 * max(1.0, abs(c))


def test_fourier_tail_near_singular_profile():
    def tail(M):
        q = (np.arange(M) + 0.5) / M
        return fourier_tail(1.0 / (1.04 - np.cos(2 * np.pi * q))).size

    assert tail(32) > 1e-3
    assert tail(256) < 1e-10


def test_fourier_tail_matches_direct_dft():
    M, s = 32, 0.5
    q = (np.arange(M) + s) / M
    f = 1.0 / (1.04 - np.cos(2 * np.pi * q))
    K = (M - 1) // 2
    direct = [abs(np.sum(f * np.exp(-2j * np.pi * k * q)) / M) for k in (K, K - 1)]
    t = fourier_tail(f, s)
    np.testing.assert_allclose([t.last, t.second_last], direct, rtol=1e-12)


def test_legendre_tail_of_p2():
    t, _ = gauss_legendre(8)
    tail = legendre_tail(legendre.legval(t, [0, 0, 1]))
    assert tail.size < 1e-14


def test_legendre_tail_of_constant():
    from bie2d.discretization import legendre_coefficients

    c = legendre_coefficients(np.full(10, 2.5))
    np.testing.assert_allclose(c[0], 2.5, rtol=1e-14)
    assert np.abs(c[1:]).max() < 1e-14


def test_legendre_tail_decays_with_order():
    def tail(M):
        t, _ = gauss_legendre(M)
        return legendre_tail(np.abs(0.5 * (t + 1.3)) ** 3.5).size

    assert tail(16) <= tail(8) / 10
