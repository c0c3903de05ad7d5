"""Small exact-ish planar geometry helpers (orientation tests, polygons)."""

from __future__ import annotations

from typing import Sequence

import numpy as np

Point = tuple[float, float]


def orient(a: Point, b: Point, c: Point) -> float:
    """Twice the signed area of triangle abc (>0 counter-clockwise)."""
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _sign(v: float) -> int:
    return (v > 0) - (v < 0)


def on_segment(p: Point, a: Point, b: Point) -> bool:
    """True if p lies on the closed segment ab (p assumed collinear with ab)."""
    return (
        min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
        and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])
    )


def segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool:
    """Closed-segment intersection test, touching and collinear overlap included."""
    d1 = _sign(orient(q1, q2, p1))
    d2 = _sign(orient(q1, q2, p2))
    d3 = _sign(orient(p1, p2, q1))
    d4 = _sign(orient(p1, p2, q2))
    if d1 * d2 < 0 and d3 * d4 < 0:
        return True
    if d1 == 0 and on_segment(p1, q1, q2):
        return True
    if d2 == 0 and on_segment(p2, q1, q2):
        return True
    if d3 == 0 and on_segment(q1, p1, p2):
        return True
    if d4 == 0 and on_segment(q2, p1, p2):
        return True
    return False


def branches_conflict(p1: Point, p2: Point, q1: Point, q2: Point, shared: bool) -> bool:
    """Whether two straight branches violate planarity.

    When the branches share an endpoint they may only meet at that point, so
    the only possible violation is a collinear overlap beyond it.
    """
    if not shared:
        return segments_intersect(p1, p2, q1, q2)
    s, a = (p1, p2) if p1 in (q1, q2) else (p2, p1)
    b = q2 if q1 == s else q1
    if orient(s, a, b) != 0:
        return False
    # collinear: overlap iff the far ends lie on the same side of the shared point
    return (a[0] - s[0]) * (b[0] - s[0]) + (a[1] - s[1]) * (b[1] - s[1]) > 0


def points_in_polygon(points: np.ndarray, polygon: Sequence[Point], eps: float = 1e-12) -> np.ndarray:
    """Vectorized ray-casting test; points on the boundary count as inside."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    px, py = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    boundary = np.zeros(len(pts), dtype=bool)
    m = len(polygon)
    for i in range(m):
        x1, y1 = polygon[i - 1]
        x2, y2 = polygon[i]
        cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
        within = (
            (px >= min(x1, x2) - eps) & (px <= max(x1, x2) + eps)
            & (py >= min(y1, y2) - eps) & (py <= max(y1, y2) + eps)
        )
        boundary |= within & (np.abs(cross) <= eps * max(1.0, abs(x2 - x1) + abs(y2 - y1)))
        straddle = (y1 > py) != (y2 > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_at = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
        inside ^= straddle & (px < x_at)
    return inside | boundary


def point_in_polygon(point: Point, polygon: Sequence[Point]) -> bool:
    return bool(points_in_polygon(np.array([point]), polygon)[0])


def polygon_is_simple(polygon: Sequence[Point]) -> bool:
    """Brute-force check that no two non-adjacent edges touch."""
    m = len(polygon)
    if m < 3:
        return False
    edges = [(polygon[i], polygon[(i + 1) % m]) for i in range(m)]
    for i in range(m):
        for j in range(i + 1, m):
            adjacent = j == i + 1 or (i == 0 and j == m - 1)
            a, b = edges[i]
            c, d = edges[j]
            if adjacent:
                if branches_conflict(a, b, c, d, shared=True):
                    return False
            elif segments_intersect(a, b, c, d):
                return False
    return True
