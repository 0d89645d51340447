import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gngiemd.geometry import (Containment, OrientedBox, aspect_ratio, convex_hull, ombb,
                              point_in_polygon, points_in_polygon)
from oracles import brute_force_min_box_area, in_hull_halfplanes

coords = st.floats(-100, 100, allow_nan=False, allow_infinity=False)
point_sets = arrays(np.float64, st.tuples(st.integers(1, 40), st.just(2)), elements=coords)

UNIT_SQUARE = np.array([(0, 0), (1, 0), (1, 1), (0, 1)], float)


def test_hull_drops_interior_point():
    h = convex_hull([(0, 0), (1, 0), (0, 1), (1, 1), (0.5, 0.5)])
    assert not h.degenerate
    assert {tuple(p) for p in h.vertices} == {(0, 0), (1, 0), (0, 1), (1, 1)}


def test_hull_single_point_is_degenerate():
    h = convex_hull([(0, 0)])
    assert h.degenerate and len(h) == 1


def test_hull_collinear_is_segment():
    h = convex_hull([(0, 0), (1, 1), (3, 3), (2, 2)])
    assert h.degenerate
    assert {tuple(p) for p in h.vertices} == {(0, 0), (3, 3)}


def test_hull_empty_raises():
    with pytest.raises(ValueError, match="empty point set"):
        convex_hull([])


def test_hull_winds_with_positive_area():
    h = convex_hull(np.random.default_rng(1).random((30, 2)))
    assert h.area > 0


def test_hull_contains_random_disk_points():
    rng = np.random.default_rng(7)
    r = np.sqrt(rng.random(100))
    t = rng.uniform(0, 2 * np.pi, 100)
    pts = np.column_stack([r * np.cos(t), r * np.sin(t)])
    h = convex_hull(pts)
    assert all(in_hull_halfplanes(p, h.vertices) for p in pts)


@given(point_sets)
def test_hull_idempotent(pts):
    h = convex_hull(pts)
    again = convex_hull(h.vertices)
    assert {tuple(p) for p in again.vertices} == {tuple(p) for p in h.vertices}


@given(point_sets)
def test_hull_contains_inputs(pts):
    h = convex_hull(pts)
    if h.degenerate:
        return
    scale = float(np.abs(pts).max()) + 1
    assert all(in_hull_halfplanes(p, h.vertices, tol=1e-9 * scale) for p in pts)


def test_ombb_unit_square():
    b = ombb(UNIT_SQUARE)
    assert b.length == pytest.approx(1) and b.width == pytest.approx(1)
    assert aspect_ratio(b) == pytest.approx(1.0)


def test_ombb_rectangle():
    b = ombb([(0, 0), (4, 0), (4, 1), (0, 1)])
    assert b.length == pytest.approx(4) and b.width == pytest.approx(1)


def test_ombb_matches_exhaustive_search():
    pts = np.random.default_rng(3).normal(size=(50, 2)) * [3, 1]
    assert ombb(pts).area == pytest.approx(brute_force_min_box_area(pts), rel=1e-9)


def _inside_box(box: OrientedBox, pts, tol):
    u = np.asarray(box.axis)
    v = np.array([-u[1], u[0]])
    d = np.asarray(pts) - np.asarray(box.center)
    return np.all(np.abs(d @ u) <= box.length / 2 + tol) and np.all(np.abs(d @ v) <= box.width / 2 + tol)


@given(point_sets)
def test_ombb_encloses_and_beats_axis_box(pts):
    b = ombb(pts)
    span = pts.max(axis=0) - pts.min(axis=0)
    scale = float(np.abs(pts).max()) + 1
    assert b.width <= b.length
    assert b.area <= span[0] * span[1] * (1 + 1e-9) + 1e-9 * scale ** 2
    assert _inside_box(b, pts, 1e-9 * scale * 10)


@given(arrays(np.float64, st.tuples(st.integers(3, 25), st.just(2)), elements=coords),
       st.floats(0, 2 * math.pi))
def test_ombb_rotation_equivariant(pts, theta):
    b = ombb(pts)
    c, s = math.cos(theta), math.sin(theta)
    rot = pts @ np.array([[c, s], [-s, c]])
    r = ombb(rot)
    scale = float(np.abs(pts).max()) + 1
    # several orientations may tie on area (a right triangle), so only the
    # area is compared here; length and width are checked on generic input
    assert r.area == pytest.approx(b.area, rel=1e-6, abs=1e-6 * scale ** 2)


def test_ombb_rotation_preserves_extents_and_turns_axis():
    pts = np.random.default_rng(5).normal(size=(25, 2)) * [4, 1]
    b = ombb(pts)
    theta = 0.7
    c, s = math.cos(theta), math.sin(theta)
    rot = np.array([[c, -s], [s, c]])
    r = ombb(pts @ rot.T)
    assert r.length == pytest.approx(b.length, rel=1e-6)
    assert r.width == pytest.approx(b.width, rel=1e-6)
    assert abs(float(np.dot(rot @ np.asarray(b.axis), r.axis))) == pytest.approx(1, abs=1e-6)


def test_ombb_side_flush_with_hull_edge():
    pts = np.random.default_rng(11).random((40, 2))
    b = ombb(pts)
    hull = convex_hull(pts).vertices
    dirs = np.roll(hull, -1, axis=0) - hull
    dirs /= np.hypot(dirs[:, 0], dirs[:, 1])[:, None]
    u = np.asarray(b.axis)
    # some hull edge runs parallel or perpendicular to the box axis
    assert np.any(np.isclose(np.abs(dirs @ u), 1) | np.isclose(np.abs(dirs @ u), 0, atol=1e-9))


def test_aspect_ratio_values():
    assert aspect_ratio(OrientedBox((0, 0), (1, 0), 4.0, 1.0)) == 0.25
    assert aspect_ratio(OrientedBox((0, 0), (1, 0), 2.0, 2.0)) == 1.0
    assert aspect_ratio(OrientedBox((0, 0), (1, 0), 0.0, 0.0)) == 1.0
    # collinear points: width floored at min_width
    assert aspect_ratio(ombb([(0, 0), (10, 0)]), min_width=1.0) == pytest.approx(0.1)


@given(point_sets, st.floats(1e-3, 10))
def test_aspect_ratio_in_unit_interval(pts, min_width):
    a = aspect_ratio(ombb(pts), min_width=min_width)
    assert 0 < a <= 1


def test_point_in_polygon_cases():
    assert point_in_polygon((0.5, 0.5), UNIT_SQUARE) is Containment.INSIDE
    assert point_in_polygon((2, 2), UNIT_SQUARE) is Containment.OUTSIDE
    assert point_in_polygon((1, 0.5), UNIT_SQUARE) is Containment.ON_BOUNDARY


def test_point_in_polygon_rejects_degenerate():
    with pytest.raises(ValueError):
        point_in_polygon((0, 0), convex_hull([(0, 0), (1, 1)]))


@given(arrays(np.float64, (30, 2), elements=st.floats(-0.5, 1.5)))
def test_vectorized_matches_scalar(pts):
    fast = points_in_polygon(pts, UNIT_SQUARE)
    slow = [point_in_polygon(p, UNIT_SQUARE) is Containment.INSIDE for p in pts]
    assert list(fast) == slow
