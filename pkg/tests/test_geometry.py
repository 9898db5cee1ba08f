import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from bie2d import testcases
from bie2d.errors import BadSigma, DegenerateSpeed, IntersectingCurves, InvalidCurve, NotNested
from bie2d.geometry import (Circle, Ellipse, FourierCurve, PolarCosine, build_region_tree, curve_from_dict,
                            curve_geometry, curve_point, min_clearance, winding_number)
from bie2d.reference import a_from_alpha


def test_quarter_turn_of_unit_circle():
    np.testing.assert_allclose(curve_point(Circle((0, 0), 1.0), 0.25), [0.0, 1.0], atol=1e-15)


def test_circle_closes():
    c = Circle((0, 0), 1.0)
    np.testing.assert_allclose(curve_point(c, 0.0), curve_point(c, 1.0 - 1e-15), atol=1e-13)
    np.testing.assert_allclose(curve_point(c, 0.0), [1.0, 0.0])


def test_polar_cosine_start_point():
    np.testing.assert_allclose(curve_point(PolarCosine((0, 0), 1.0, 0.2, 5), 0.0), [1.2, 0.0], atol=1e-15)


@given(st.floats(0.1, 10.0), st.floats(0.0, 1.0))
def test_circle_curvature_is_inverse_radius(R, q):
    g = curve_geometry(Circle((0.3, -0.2), R), q)
    np.testing.assert_allclose(g.curvature, 1.0 / R, rtol=1e-12)


def test_unit_circle_frame_at_start():
    g = curve_geometry(Circle((0, 0), 1.0), 0.0)
    np.testing.assert_allclose(g.normal.ravel(), [1.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(g.tangent.ravel(), [0.0, 1.0], atol=1e-15)
    np.testing.assert_allclose(g.speed, 2 * np.pi)


def _fd_curvature(curve, q, h=1e-4):
    p = [curve_point(curve, q + k * h) for k in (-2, -1, 0, 1, 2)]
    d1 = (p[0] - 8 * p[1] + 8 * p[3] - p[4]) / (12 * h)
    d2 = (-p[0] + 16 * p[1] - 30 * p[2] + 16 * p[3] - p[4]) / (12 * h * h)
    return (d1[0] * d2[1] - d1[1] * d2[0]) / np.hypot(*d1) ** 3


@pytest.mark.parametrize("curve", [
    Ellipse((0, 0), (2.0, 1.0)),
    Ellipse((0.4, 0.1), (1.3, 0.6), 0.7),
    PolarCosine((0, 0), 1.0, 0.15, 5),
    FourierCurve([0.1, 1.0, 0.0, 0.1, 0.0], [0.0, 0.0, 1.0, 0.0, 0.05]),
])
@pytest.mark.parametrize("q", [0.0, 0.13, 0.5, 0.77])
def test_curvature_matches_finite_differences(curve, q):
    np.testing.assert_allclose(curve_geometry(curve, q).curvature, _fd_curvature(curve, q), atol=1e-8)


def test_ellipse_major_axis_curvature():
    # a / b^2 at the end of the major axis
    np.testing.assert_allclose(curve_geometry(Ellipse((0, 0), (2.0, 1.0)), 0.0).curvature, 2.0, rtol=1e-12)


@given(st.floats(0.0, 1.0))
def test_normal_is_outward_and_unit(q):
    c = Ellipse((0.2, 0.1), (1.5, 0.7), 0.3)
    g = curve_geometry(c, q)
    np.testing.assert_allclose(np.hypot(*g.normal.ravel()), 1.0, rtol=1e-13)
    probe_out = np.asarray(g.point).reshape(1, 2) + 1e-3 * np.asarray(g.normal).reshape(1, 2)
    probe_in = np.asarray(g.point).reshape(1, 2) - 1e-3 * np.asarray(g.normal).reshape(1, 2)
    poly = c.samples(2048)
    assert winding_number(poly, probe_out)[0] == 0
    assert winding_number(poly, probe_in)[0] == 1


def test_ellipse_length_against_elliptic_integral():
    a, b = 2.0, 1.0
    ref, _ = integrate.quad(lambda t: np.hypot(a * np.sin(t), b * np.cos(t)), 0, 2 * np.pi, epsabs=1e-14)
    np.testing.assert_allclose(Ellipse((0, 0), (a, b)).length, ref, rtol=1e-10)


def test_self_intersecting_polar_curve_rejected():
    with pytest.raises((InvalidCurve, DegenerateSpeed)):
        PolarCosine((0, 0), 0.2, 0.5, 3).validate()


def test_curve_dict_round_trip():
    for c in [Circle((1, 2), 0.5), Ellipse((0, 0), (2, 1), 0.3), PolarCosine((0, 0), 1, 0.1, 4, 0.2),
              FourierCurve([0, 1, 0], [0, 0, 1])]:
        d = c.to_dict()
        assert curve_from_dict(d).to_dict() == d


def test_six_region_layout_tree():
    tree = testcases.six_region_layout().build_tree()
    assert tree.parent.tolist() == [-1, 0, 0, 2, 2, 3]
    # one-based {4, 5, 6} below region 3
    assert tree.descendants[2] == {3, 4, 5}


def test_single_circle_tree():
    tree = build_region_tree([Circle((0, 0), 1.0)], [1.0])
    assert tree.n == 1 and tree.root == 0 and tree.descendants[0] == set()
    assert np.isinf(min_clearance(tree)[0])


def test_two_disjoint_inclusions():
    tree = build_region_tree([Circle((0, 0), 1.0), Circle((-0.4, 0), 0.2), Circle((0.4, 0), 0.2)], [1, 2, 3])
    assert tree.parent.tolist() == [-1, 0, 0]
    assert tree.descendants[0] == {1, 2}


def test_root_need_not_be_listed_first():
    tree = build_region_tree([Circle((0, 0), 0.3), Circle((0, 0), 1.0)], [2.0, 1.0])
    assert tree.root == 1 and tree.parent.tolist() == [1, -1]


def test_tree_errors():
    with pytest.raises(IntersectingCurves):
        build_region_tree([Circle((0, 0), 1.0), Circle((0.9, 0), 0.3)], [1, 2])
    with pytest.raises(NotNested):
        build_region_tree([Circle((0, 0), 1.0), Circle((3, 0), 0.3)], [1, 2])
    with pytest.raises(BadSigma):
        build_region_tree([Circle((0, 0), 1.0), Circle((0, 0), 0.3)], [1, -2])
    with pytest.raises(BadSigma):
        build_region_tree([Circle((0, 0), 1.0)], [1, 2])


def test_concentric_clearance():
    tree = testcases.concentric().build_tree()
    np.testing.assert_allclose(min_clearance(tree), [0.6, 0.6], atol=1e-9)


def test_nonconcentric_clearance_against_dense_sampling():
    tree = testcases.nonconcentric().build_tree()
    a = a_from_alpha(0.4)
    got = min_clearance(tree)
    inner = tree.curves[1].samples(20000)
    dense = (1.0 - np.hypot(*inner.T)).min()
    np.testing.assert_allclose(got, [dense, dense], atol=1e-8)
    np.testing.assert_allclose(dense, 1.0 - a, atol=1e-7)


@given(st.floats(0.005, 0.2))
def test_close_pair_clearance_is_the_gap(gap):
    tree = testcases.close_pair(gap).build_tree()
    c = min_clearance(tree)
    np.testing.assert_allclose(c[1:], gap, rtol=1e-8, atol=1e-12)


def test_many_regions_layout_size():
    tree = testcases.many_regions().build_tree()
    assert tree.n == 155
    assert (tree.depth == 2).sum() == 77
