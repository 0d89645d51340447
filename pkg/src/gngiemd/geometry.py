"""Planar primitives used by the feature extractor.

Points are ``(x, y)`` pairs in image coordinates (y grows downward). Hull
orientation is reported as positive signed area under the usual
``x1*y2 - x2*y1`` shoelace sum, which appears clockwise on screen.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

BOUNDARY_TOL = 1e-9


@dataclass(frozen=True)
class Polygon:
    vertices: np.ndarray  # (k, 2)
    degenerate: bool = False

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def area(self) -> float:
        if len(self.vertices) < 3:
            return 0.0
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


@dataclass(frozen=True)
class OrientedBox:
    center: tuple[float, float]
    axis: tuple[float, float]  # unit vector along the long side
    length: float
    width: float

    @property
    def area(self) -> float:
        return self.length * self.width

    def corners(self) -> np.ndarray:
        c = np.asarray(self.center)
        u = np.asarray(self.axis)
        v = np.array([-u[1], u[0]])
        hl, hw = 0.5 * self.length, 0.5 * self.width
        return np.array([c - hl * u - hw * v, c + hl * u - hw * v,
                         c + hl * u + hw * v, c - hl * u + hw * v])


class Containment(enum.Enum):
    INSIDE = "inside"
    ON_BOUNDARY = "on-boundary"
    OUTSIDE = "outside"


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError("empty point set")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    return pts


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points) -> Polygon:
    """Andrew's monotone chain. Collinear boundary points are dropped."""
    pts = _as_points(points)
    uniq = sorted(set(map(tuple, pts.tolist())))
    if len(uniq) == 1:
        return Polygon(np.array(uniq), degenerate=True)

    lower: list = []
    for p in uniq:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(uniq):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        # all collinear: report the two extreme points
        return Polygon(np.array([uniq[0], uniq[-1]]), degenerate=True)
    return Polygon(np.array(hull), degenerate=False)


def _box_from_extents(u, lo_u, hi_u, lo_v, hi_v) -> OrientedBox:
    v = np.array([-u[1], u[0]])
    du, dv = hi_u - lo_u, hi_v - lo_v
    center = u * (0.5 * (lo_u + hi_u)) + v * (0.5 * (lo_v + hi_v))
    if dv > du:
        u, du, dv = v, dv, du
    return OrientedBox((float(center[0]), float(center[1])),
                       (float(u[0]), float(u[1])), float(du), float(dv))


def ombb(points) -> OrientedBox:
    """Minimum-area enclosing rectangle over the hull-edge orientations.

    The optimum always has a side flush with a hull edge, so only those
    orientations are tried; ties keep the first edge in hull order.
    """
    hull = convex_hull(points)
    h = hull.vertices
    if len(h) == 1:
        return OrientedBox((float(h[0, 0]), float(h[0, 1])), (1.0, 0.0), 0.0, 0.0)
    if hull.degenerate:
        d = h[1] - h[0]
        n = math.hypot(*d)
        u = d / n
        c = 0.5 * (h[0] + h[1])
        return OrientedBox((float(c[0]), float(c[1])), (float(u[0]), float(u[1])), n, 0.0)

    edges = np.roll(h, -1, axis=0) - h
    units = edges / np.hypot(edges[:, 0], edges[:, 1])[:, None]
    # Every hull edge is a caliper orientation. Extremes are taken over all
    # hull vertices at once, which stays exact on near-degenerate hulls
    # where incremental caliper pointers can stall on ties.
    along = units @ h.T  # (edges, vertices)
    across = np.column_stack([-units[:, 1], units[:, 0]]) @ h.T
    lo_u, hi_u = along.min(axis=1), along.max(axis=1)
    lo_v, hi_v = across.min(axis=1), across.max(axis=1)
    areas = (hi_u - lo_u) * (hi_v - lo_v)
    i = int(np.argmin(areas))
    best = (areas[i], i, lo_u[i], hi_u[i], lo_v[i], hi_v[i])

    _, i, lo_u, hi_u, lo_v, hi_v = best
    return _box_from_extents(units[i], lo_u, hi_u, lo_v, hi_v)


def aspect_ratio(box: OrientedBox, min_width: float = 1.0) -> float:
    """Width over length, with the width floored at ``min_width``.

    Coincident point sets (zero length) give 1.
    """
    if box.length <= 0.0:
        return 1.0
    return min(1.0, max(box.width, min_width) / box.length)


def _segment_distance(p, a, b) -> float:
    ab = b - a
    denom = float(np.dot(ab, ab))
    t = 0.0 if denom == 0.0 else min(1.0, max(0.0, float(np.dot(p - a, ab)) / denom))
    d = p - (a + t * ab)
    return math.hypot(d[0], d[1])


def point_in_polygon(p, poly: Polygon | np.ndarray, tol: float = BOUNDARY_TOL) -> Containment:
    """Even-odd containment with an explicit on-boundary band of width ``tol``.

    Works for non-simple rings too (self-overlapping spans from a GNG walk).
    """
    verts = poly.vertices if isinstance(poly, Polygon) else np.asarray(poly, dtype=float)
    if len(verts) < 3 or (isinstance(poly, Polygon) and poly.degenerate):
        raise ValueError("degenerate polygon")
    p = np.asarray(p, dtype=float)
    x, y = p
    inside = False
    n = len(verts)
    for i in range(n):
        a, b = verts[i], verts[(i + 1) % n]
        if _segment_distance(p, a, b) <= tol:
            return Containment.ON_BOUNDARY
        if (a[1] > y) != (b[1] > y):
            xc = a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1])
            if xc > x:
                inside = not inside
    return Containment.INSIDE if inside else Containment.OUTSIDE


def points_in_polygon(points: np.ndarray, ring: np.ndarray) -> np.ndarray:
    """Vectorized strict-interior test (even-odd), boundary band excluded."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    ring = np.asarray(ring, dtype=float)
    a = ring
    b = np.roll(ring, -1, axis=0)
    px = pts[:, 0][:, None]
    py = pts[:, 1][:, None]
    ax, ay, bx, by = a[:, 0], a[:, 1], b[:, 0], b[:, 1]
    straddle = (ay > py) != (by > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xc = ax + (py - ay) * (bx - ax) / (by - ay)
    inside = (np.sum(straddle & (xc > px), axis=1) % 2) == 1

    abx, aby = bx - ax, by - ay
    denom = abx * abx + aby * aby
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(denom > 0, ((px - ax) * abx + (py - ay) * aby) / denom, 0.0)
    t = np.clip(t, 0.0, 1.0)
    dx = px - (ax + t * abx)
    dy = py - (ay + t * aby)
    on_edge = np.any(np.hypot(dx, dy) <= BOUNDARY_TOL, axis=1)
    return inside & ~on_edge
