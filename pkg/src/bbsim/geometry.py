"""2D geometry primitives: convex polygons, polylines, collision and Frenet projection.

All functions are pure and operate on immutable inputs; they are safe to call
from any number of concurrent workers. Coordinates are meters, angles radians,
double precision throughout. Equality tolerance is EPS = 1e-9 m.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from typing import NamedTuple, Sequence

EPS = 1e-9


class Point2(NamedTuple):
    x: float
    y: float


class FrenetCoord(NamedTuple):
    """Arc-length position along a polyline plus signed lateral offset (left positive)."""

    s: float
    d: float


class GeometryError(ValueError):
    pass


def _is_finite(v: float) -> bool:
    return not (math.isnan(v) or math.isinf(v))


class Polygon:
    """Convex polygon given as CCW vertices; the closing edge is implicit.

    Construction validates: >= 3 vertices, finite coordinates, counter-clockwise
    orientation, non-zero area and convexity (collinear runs are tolerated).
    """

    __slots__ = ("vertices", "_centroid", "_radius")

    def __init__(self, vertices: Sequence[tuple[float, float]]):
        pts = tuple(Point2(float(x), float(y)) for x, y in vertices)
        if len(pts) < 3:
            raise GeometryError("polygon needs at least 3 vertices")
        for p in pts:
            if not (_is_finite(p.x) and _is_finite(p.y)):
                raise GeometryError("polygon vertex not finite")
        area2 = 0.0
        n = len(pts)
        for i in range(n):
            ax, ay = pts[i]
            bx, by = pts[(i + 1) % n]
            area2 += ax * by - bx * ay
        if area2 <= EPS:
            if area2 < -EPS:
                raise GeometryError("polygon vertices must be counter-clockwise")
            raise GeometryError("polygon area is zero")
        for i in range(n):
            ax, ay = pts[i]
            bx, by = pts[(i + 1) % n]
            cx, cy = pts[(i + 2) % n]
            cross = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
            if cross < -EPS:
                raise GeometryError("polygon is not convex")
        self.vertices = pts
        cx = sum(p.x for p in pts) / n
        cy = sum(p.y for p in pts) / n
        self._centroid = Point2(cx, cy)
        self._radius = max(math.hypot(p.x - cx, p.y - cy) for p in pts)

    @property
    def centroid(self) -> Point2:
        return self._centroid

    @property
    def radius(self) -> float:
        """Radius of the bounding circle around the vertex centroid."""
        return self._radius

    def area(self) -> float:
        a = 0.0
        pts = self.vertices
        n = len(pts)
        for i in range(n):
            ax, ay = pts[i]
            bx, by = pts[(i + 1) % n]
            a += ax * by - bx * ay
        return 0.5 * a

    def __eq__(self, other) -> bool:
        return isinstance(other, Polygon) and self.vertices == other.vertices

    def __hash__(self):
        return hash(self.vertices)

    def __repr__(self) -> str:
        return f"Polygon({list(self.vertices)!r})"


def polygon_transform(poly: Polygon, pose: tuple[float, float, float]) -> Polygon:
    """Rotate poly by theta, then translate by (x, y)."""
    x, y, theta = pose
    c = math.cos(theta)
    s = math.sin(theta)
    return Polygon(
        [(x + c * px - s * py, y + s * px + c * py) for px, py in poly.vertices]
    )


def _project_onto_axis(vertices, ax: float, ay: float) -> tuple[float, float]:
    lo = hi = vertices[0][0] * ax + vertices[0][1] * ay
    for px, py in vertices:
        d = px * ax + py * ay
        if d < lo:
            lo = d
        elif d > hi:
            hi = d
    return lo, hi


def polygon_collide(a: Polygon, b: Polygon) -> bool:
    """Closed-set intersection test for convex polygons (separating axes).

    Touching boundaries count as a collision.
    """
    # Bounding-circle reject: cheap out for the common far-apart case.
    dx = a._centroid.x - b._centroid.x
    dy = a._centroid.y - b._centroid.y
    rr = a._radius + b._radius
    if dx * dx + dy * dy > rr * rr:
        return False
    for poly in (a, b):
        verts = poly.vertices
        n = len(verts)
        for i in range(n):
            px, py = verts[i]
            qx, qy = verts[(i + 1) % n]
            # Outward normal of a CCW edge.
            ax = qy - py
            ay = px - qx
            lo_a, hi_a = _project_onto_axis(a.vertices, ax, ay)
            lo_b, hi_b = _project_onto_axis(b.vertices, ax, ay)
            if hi_a < lo_b or hi_b < lo_a:
                return False
    return True


def point_in_polygon(p: Point2 | tuple[float, float], poly: Polygon) -> bool:
    """True iff p lies inside poly or on its boundary."""
    px, py = p
    verts = poly.vertices
    n = len(verts)
    for i in range(n):
        ax, ay = verts[i]
        bx, by = verts[(i + 1) % n]
        # CCW polygon: point must not lie strictly right of any edge.
        if (bx - ax) * (py - ay) - (by - ay) * (px - ax) < -EPS:
            return False
    return True


def polygon_contains_polygon(outer: Polygon | Sequence[Polygon], inner: Polygon) -> bool:
    """True iff every vertex of inner lies within the outer region.

    ``outer`` may be a single convex polygon or a convex decomposition
    (sequence of convex pieces); a vertex counts as contained when it lies
    in any piece.
    """
    pieces = (outer,) if isinstance(outer, Polygon) else tuple(outer)
    for v in inner.vertices:
        if not any(point_in_polygon(v, piece) for piece in pieces):
            return False
    return True


class Polyline:
    """Ordered point sequence with cumulative arc length per point."""

    __slots__ = ("points", "cumlength", "_seg")

    def __init__(self, points: Sequence[tuple[float, float]]):
        pts = tuple(Point2(float(x), float(y)) for x, y in points)
        if len(pts) < 2:
            raise GeometryError("polyline needs at least 2 points")
        cum = [0.0]
        seg = []
        for i in range(len(pts) - 1):
            ax, ay = pts[i]
            bx, by = pts[i + 1]
            length = math.hypot(bx - ax, by - ay)
            if length <= EPS:
                raise GeometryError("polyline has duplicate consecutive points")
            # Unit direction per segment; used by projection and arc-length lookup.
            seg.append((ax, ay, (bx - ax) / length, (by - ay) / length, length))
            cum.append(cum[-1] + length)
        self.points = pts
        self.cumlength = tuple(cum)
        self._seg = seg

    @property
    def length(self) -> float:
        return self.cumlength[-1]

    def __eq__(self, other) -> bool:
        return isinstance(other, Polyline) and self.points == other.points

    def __hash__(self):
        return hash(self.points)

    def __repr__(self) -> str:
        return f"Polyline({list(self.points)!r})"


def project_to_polyline(line: Polyline, p: Point2 | tuple[float, float]) -> FrenetCoord:
    """Frenet coordinates of the closest point on ``line`` to ``p``.

    The nearest segment wins; exact ties go to the smaller arc length.
    Projections beyond either end clamp to the end point.
    """
    px, py = p
    best_dist = math.inf
    best_s = 0.0
    best_d = 0.0
    cum = line.cumlength
    for i, (ax, ay, ux, uy, length) in enumerate(line._seg):
        rx = px - ax
        ry = py - ay
        t = rx * ux + ry * uy
        if t < 0.0:
            t = 0.0
        elif t > length:
            t = length
        cx = ax + ux * t
        cy = ay + uy * t
        dist = math.hypot(px - cx, py - cy)
        if dist < best_dist - EPS:
            best_dist = dist
            best_s = cum[i] + t
            # Signed lateral offset; left of travel direction is positive.
            best_d = -uy * rx + ux * ry
    return FrenetCoord(best_s, best_d)


def point_at_arclength(line: Polyline, s: float, d: float = 0.0) -> tuple[Point2, float]:
    """Point at arc length ``s`` offset laterally by ``d``; returns (point, heading).

    Raises GeometryError when s is outside [0, total length].
    """
    total = line.cumlength[-1]
    if s < -EPS or s > total + EPS:
        raise GeometryError(f"arclength {s} outside [0, {total}]")
    s = min(max(s, 0.0), total)
    idx = bisect_right(line.cumlength, s) - 1
    if idx >= len(line._seg):
        idx = len(line._seg) - 1
    ax, ay, ux, uy, _length = line._seg[idx]
    t = s - line.cumlength[idx]
    # Lateral offset along the left normal (-uy, ux).
    return (
        Point2(ax + ux * t - uy * d, ay + uy * t + ux * d),
        math.atan2(uy, ux),
    )


def wrap_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    w = math.fmod(theta + math.pi, 2.0 * math.pi)
    if w <= 0.0:
        w += 2.0 * math.pi
    return w - math.pi
