"""Lane-graph map parsing and per-agent road corridors.

The map file is a versioned structured-text format (header ``barkmap 1``).
Tokens are whitespace separated, ``#`` starts a comment running to end of
line. Each lane block looks like::

    lane <id>
      left <id>                 # optional left neighbor
      right <id>                # optional right neighbor
      successors <id> [<id>...] # optional
      width <meters>            # optional, default 3.5; used when boundaries absent
      center x y x y ...        # >= 2 points
      left_boundary x y ...     # optional explicit boundary
      right_boundary x y ...    # optional explicit boundary
    end

RoadMap and RoadCorridor values are immutable after construction and may be
shared freely across concurrent scenario workers.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from typing import NamedTuple, Optional, Sequence

from .geometry import (
    EPS,
    GeometryError,
    Point2,
    Polygon,
    Polyline,
    point_in_polygon,
    polygon_collide,
    project_to_polyline,
)

DEFAULT_LANE_WIDTH = 3.5
_JOIN_TOL = 1e-6


def _wrap_pi(theta: float) -> float:
    from .geometry import wrap_angle

    return wrap_angle(theta)


class MapParseError(ValueError):
    """Malformed map syntax; carries line/column of the offending token."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class MapSemanticError(ValueError):
    pass


class NoRouteError(ValueError):
    pass


class GoalRegion(NamedTuple):
    polygon: Polygon


class LaneGoal(NamedTuple):
    lane_id: int
    min_arclength: float


GoalDefinition = GoalRegion | LaneGoal


class Lane(NamedTuple):
    id: int
    center: Polyline
    left_boundary: Polyline
    right_boundary: Polyline
    successors: tuple[int, ...]
    left_neighbor: Optional[int]
    right_neighbor: Optional[int]
    half_widths: tuple[float, ...]  # aligned with center points
    explicit_boundaries: bool
    width_hint: float


def _offset_polyline(center: Polyline, offset: float) -> Polyline:
    """Offset a polyline laterally (left positive) using averaged joint normals."""
    pts = center.points
    seg = center._seg
    normals = []
    for _ax, _ay, ux, uy, _l in seg:
        normals.append((-uy, ux))
    out = []
    for i in range(len(pts)):
        if i == 0:
            nx, ny = normals[0]
        elif i == len(pts) - 1:
            nx, ny = normals[-1]
        else:
            nx = normals[i - 1][0] + normals[i][0]
            ny = normals[i - 1][1] + normals[i][1]
            norm = math.hypot(nx, ny)
            if norm < EPS:
                nx, ny = normals[i]
            else:
                nx, ny = nx / norm, ny / norm
        out.append((pts[i].x + nx * offset, pts[i].y + ny * offset))
    return Polyline(out)


def _build_lane(
    lane_id: int,
    center_pts: Sequence[tuple[float, float]],
    left_pts: Optional[Sequence[tuple[float, float]]],
    right_pts: Optional[Sequence[tuple[float, float]]],
    successors: tuple[int, ...],
    left_neighbor: Optional[int],
    right_neighbor: Optional[int],
    width: float,
) -> Lane:
    if len(center_pts) < 2:
        raise MapSemanticError(f"lane {lane_id}: centerline needs at least 2 points")
    center = Polyline(center_pts)
    explicit = left_pts is not None or right_pts is not None
    left = Polyline(left_pts) if left_pts else _offset_polyline(center, width / 2.0)
    right = Polyline(right_pts) if right_pts else _offset_polyline(center, -width / 2.0)
    # Boundaries must sit on the correct side of the center line.
    for name, boundary, sign in (("left", left, 1.0), ("right", right, -1.0)):
        for p in boundary.points:
            d = project_to_polyline(center, p).d
            if d * sign <= 0.0:
                raise MapSemanticError(
                    f"lane {lane_id}: {name} boundary point {tuple(p)} is on the wrong side"
                )
    half_widths = []
    for p in center.points:
        half_widths.append((_point_dist(left, p) + _point_dist(right, p)) / 2.0)
    return Lane(
        lane_id,
        center,
        left,
        right,
        successors,
        left_neighbor,
        right_neighbor,
        tuple(half_widths),
        explicit,
        width,
    )


def _point_dist(line: Polyline, p: Point2) -> float:
    fc = project_to_polyline(line, p)
    q, _ = _line_point(line, fc.s)
    return math.hypot(p.x - q.x, p.y - q.y)


def _line_point(line: Polyline, s: float) -> tuple[Point2, float]:
    from .geometry import point_at_arclength

    return point_at_arclength(line, min(max(s, 0.0), line.length), 0.0)


class RoadMap:
    """Immutable collection of lanes keyed by id."""

    __slots__ = ("lanes", "map_name")

    def __init__(self, lanes: dict[int, Lane], map_name: str = ""):
        for lane in lanes.values():
            for sid in lane.successors:
                if sid not in lanes:
                    raise MapSemanticError(f"unknown lane {sid}")
                if sid == lane.id:
                    raise MapSemanticError(f"lane {lane.id} is its own successor")
            for nid in (lane.left_neighbor, lane.right_neighbor):
                if nid is not None and nid not in lanes:
                    raise MapSemanticError(f"unknown lane {nid}")
        self.lanes = dict(sorted(lanes.items()))
        self.map_name = map_name

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, RoadMap)
            and self.map_name == other.map_name
            and self.lanes == other.lanes
        )

    def __repr__(self) -> str:
        return f"RoadMap({self.map_name!r}, lanes={sorted(self.lanes)})"


class _Tokenizer:
    def __init__(self, text: str):
        self.tokens: list[tuple[str, int, int]] = []
        for ln, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0]
            col = 0
            for piece in line.split():
                col = line.index(piece, col) + 1
                self.tokens.append((piece, ln, col))
                col += len(piece) - 1
        self.pos = 0
        self.last_line = 1
        self.last_col = 1

    def peek(self) -> Optional[str]:
        if self.pos < len(self.tokens):
            return self.tokens[self.pos][0]
        return None

    def next(self, expect: str = "token") -> str:
        if self.pos >= len(self.tokens):
            raise MapParseError(f"unexpected end of file, expected {expect}", self.last_line, self.last_col)
        tok, ln, col = self.tokens[self.pos]
        self.pos += 1
        self.last_line, self.last_col = ln, col
        return tok

    def error(self, message: str):
        raise MapParseError(message, self.last_line, self.last_col)


def _parse_int(tz: _Tokenizer, what: str) -> int:
    tok = tz.next(what)
    try:
        return int(tok)
    except ValueError:
        tz.error(f"expected integer {what}, got {tok!r}")


def _parse_float(tz: _Tokenizer, what: str) -> float:
    tok = tz.next(what)
    try:
        return float(tok)
    except ValueError:
        tz.error(f"expected number {what}, got {tok!r}")


_POINT_KEYS = ("center", "left_boundary", "right_boundary")
_LANE_KEYS = {"left", "right", "successors", "width", "end", *_POINT_KEYS}


def _parse_points(tz: _Tokenizer, what: str) -> list[tuple[float, float]]:
    pts = []
    while True:
        nxt = tz.peek()
        if nxt is None or nxt in _LANE_KEYS or nxt == "lane":
            break
        x = _parse_float(tz, f"{what} x")
        nxt = tz.peek()
        if nxt is None or nxt in _LANE_KEYS or nxt == "lane":
            tz.error(f"{what} has an odd number of coordinates")
        y = _parse_float(tz, f"{what} y")
        pts.append((x, y))
    if len(pts) < 2:
        tz.error(f"{what} needs at least 2 points")
    return pts


def parse_map(content: bytes | str, map_name: str = "") -> RoadMap:
    """Parse a ``barkmap 1`` file into a validated RoadMap."""
    text = content.decode("utf-8") if isinstance(content, bytes) else content
    tz = _Tokenizer(text)
    magic = tz.next("header 'barkmap'")
    if magic != "barkmap":
        tz.error(f"expected header 'barkmap', got {magic!r}")
    version = _parse_int(tz, "format version")
    if version != 1:
        tz.error(f"unsupported map format version {version}")
    lanes: dict[int, Lane] = {}
    while tz.peek() is not None:
        kw = tz.next("'lane'")
        if kw != "lane":
            tz.error(f"expected 'lane', got {kw!r}")
        lane_id = _parse_int(tz, "lane id")
        if lane_id in lanes:
            raise MapSemanticError(f"duplicate lane {lane_id}")
        left_nb = right_nb = None
        successors: tuple[int, ...] = ()
        width = DEFAULT_LANE_WIDTH
        center_pts = None
        left_pts = right_pts = None
        while True:
            kw = tz.next("lane attribute or 'end'")
            if kw == "end":
                break
            elif kw == "left":
                left_nb = _parse_int(tz, "left neighbor id")
            elif kw == "right":
                right_nb = _parse_int(tz, "right neighbor id")
            elif kw == "width":
                width = _parse_float(tz, "lane width")
            elif kw == "successors":
                succ = []
                while tz.peek() is not None and tz.peek() not in _LANE_KEYS:
                    succ.append(_parse_int(tz, "successor id"))
                if not succ:
                    tz.error("successors list is empty")
                successors = tuple(succ)
            elif kw == "center":
                center_pts = _parse_points(tz, "center")
            elif kw == "left_boundary":
                left_pts = _parse_points(tz, "left_boundary")
            elif kw == "right_boundary":
                right_pts = _parse_points(tz, "right_boundary")
            else:
                tz.error(f"unknown lane attribute {kw!r}")
        if center_pts is None:
            raise MapSemanticError(f"lane {lane_id}: missing centerline")
        try:
            lanes[lane_id] = _build_lane(
                lane_id, center_pts, left_pts, right_pts, successors, left_nb, right_nb, width
            )
        except GeometryError as exc:
            raise MapSemanticError(f"lane {lane_id}: {exc}") from exc
    if not lanes:
        tz.error("map defines no lanes")
    return RoadMap(lanes, map_name)


def serialize_map(road_map: RoadMap) -> str:
    """Canonical text form; ``parse_map(serialize_map(m)) == m``."""
    out = ["barkmap 1", ""]
    for lane_id, lane in road_map.lanes.items():
        out.append(f"lane {lane_id}")
        if lane.left_neighbor is not None:
            out.append(f"  left {lane.left_neighbor}")
        if lane.right_neighbor is not None:
            out.append(f"  right {lane.right_neighbor}")
        if lane.successors:
            out.append("  successors " + " ".join(str(s) for s in lane.successors))
        out.append(f"  width {lane.width_hint!r}")
        out.append("  center " + " ".join(f"{p.x!r} {p.y!r}" for p in lane.center.points))
        if lane.explicit_boundaries:
            out.append(
                "  left_boundary "
                + " ".join(f"{p.x!r} {p.y!r}" for p in lane.left_boundary.points)
            )
            out.append(
                "  right_boundary "
                + " ".join(f"{p.x!r} {p.y!r}" for p in lane.right_boundary.points)
            )
        out.append("end")
        out.append("")
    return "\n".join(out)


def _lane_region(lane: Lane) -> tuple[Polygon, ...]:
    """Convex decomposition of the lane surface between its boundaries."""
    center = lane.center
    stations_l = []
    stations_r = []
    for p in center.points:
        fl = project_to_polyline(lane.left_boundary, p)
        fr = project_to_polyline(lane.right_boundary, p)
        ql, _ = _line_point(lane.left_boundary, fl.s)
        qr, _ = _line_point(lane.right_boundary, fr.s)
        stations_l.append(ql)
        stations_r.append(qr)
    quads: list[Polygon] = []
    for i in range(len(center.points) - 1):
        corners = [
            tuple(stations_r[i]),
            tuple(stations_r[i + 1]),
            tuple(stations_l[i + 1]),
            tuple(stations_l[i]),
        ]
        try:
            quads.append(Polygon(corners))
        except GeometryError:
            # Curved segment made the quad non-convex; fall back to triangles.
            for tri in ((corners[0], corners[1], corners[2]), (corners[0], corners[2], corners[3])):
                try:
                    quads.append(Polygon(tri))
                except GeometryError:
                    pass
    if not quads:
        raise MapSemanticError(f"lane {lane.id}: degenerate surface region")
    return tuple(quads)


class RoadCorridor:
    """Successor-connected lane chain with concatenated center line and region.

    ``left_corridor``/``right_corridor`` are built lazily over neighbor lanes.
    """

    __slots__ = (
        "road_map",
        "lane_ids",
        "center",
        "region",
        "_stations",
        "_half_widths",
        "_const_hw",
        "_left",
        "_right",
        "_single_seg",
        "_seg1_heading",
        "_length",
    )

    def __init__(self, road_map: RoadMap, lane_ids: Sequence[int]):
        if not lane_ids:
            raise ValueError("corridor needs at least one lane")
        lanes = [road_map.lanes[lid] for lid in lane_ids]
        for a, b in zip(lanes, lanes[1:]):
            if b.id not in a.successors:
                raise ValueError(f"lanes {a.id} -> {b.id} are not successor-connected")
        pts: list[tuple[float, float]] = []
        half_widths: list[float] = []
        for lane in lanes:
            lane_pts = lane.center.points
            start = 0
            if pts:
                lx, ly = pts[-1]
                fx, fy = lane_pts[0]
                if math.hypot(lx - fx, ly - fy) <= _JOIN_TOL:
                    start = 1  # drop duplicated junction point
            for i in range(start, len(lane_pts)):
                pts.append(tuple(lane_pts[i]))
                half_widths.append(lane.half_widths[i])
        self.road_map = road_map
        self.lane_ids = tuple(lane_ids)
        self.center = Polyline(pts)
        region: list[Polygon] = []
        for lane in lanes:
            region.extend(_lane_region(lane))
        self.region = tuple(region)
        self._stations = tuple(self.center.cumlength)
        self._half_widths = tuple(half_widths)
        self._const_hw = half_widths[0] if min(half_widths) == max(half_widths) else None
        self._left = ...
        self._right = ...
        self._length = self.center.length
        seg = self.center._seg
        if len(seg) == 1:
            self._single_seg = seg[0]
            heading = math.atan2(seg[0][3], seg[0][2])
            self._seg1_heading = (heading, _wrap_pi(heading))
        else:
            self._single_seg = None
            self._seg1_heading = None

    def half_width_at(self, s: float) -> float:
        if self._const_hw is not None:
            return self._const_hw
        stations = self._stations
        widths = self._half_widths
        if s <= stations[0]:
            return widths[0]
        if s >= stations[-1]:
            return widths[-1]
        i = bisect_right(stations, s) - 1
        if i >= len(widths) - 1:
            return widths[-1]
        span = stations[i + 1] - stations[i]
        f = (s - stations[i]) / span if span > 0 else 0.0
        return widths[i] + f * (widths[i + 1] - widths[i])

    def _neighbor_chain(self, side: str) -> Optional[tuple[int, ...]]:
        chain = []
        for lid in self.lane_ids:
            lane = self.road_map.lanes[lid]
            nb = lane.left_neighbor if side == "left" else lane.right_neighbor
            if nb is None:
                break
            if chain and nb == chain[-1]:
                continue
            if chain and nb not in self.road_map.lanes[chain[-1]].successors:
                break
            chain.append(nb)
        return tuple(chain) if chain else None

    @property
    def left_corridor(self) -> Optional["RoadCorridor"]:
        if self._left is ...:
            chain = self._neighbor_chain("left")
            self._left = RoadCorridor(self.road_map, chain) if chain else None
        return self._left

    @property
    def right_corridor(self) -> Optional["RoadCorridor"]:
        if self._right is ...:
            chain = self._neighbor_chain("right")
            self._right = RoadCorridor(self.road_map, chain) if chain else None
        return self._right

    def project(self, x: float, y: float):
        """(s, d) of a world point relative to the corridor center."""
        seg = self._single_seg
        if seg is not None:
            ax, ay, ux, uy, length = seg
            rx = x - ax
            ry = y - ay
            t = rx * ux + ry * uy
            if t < 0.0:
                t = 0.0
            elif t > length:
                t = length
            return t, -uy * rx + ux * ry
        fc = project_to_polyline(self.center, (x, y))
        return fc.s, fc.d

    def contains_point(self, p) -> bool:
        return any(point_in_polygon(p, quad) for quad in self.region)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, RoadCorridor)
            and self.lane_ids == other.lane_ids
            and self.center == other.center
        )

    def __hash__(self):
        return hash(self.lane_ids)

    def __repr__(self) -> str:
        return f"RoadCorridor(lanes={self.lane_ids})"


def _lane_satisfies_goal(road_map: RoadMap, lane: Lane, goal: GoalDefinition) -> bool:
    if isinstance(goal, LaneGoal):
        return lane.id == goal.lane_id
    region = _lane_region(lane)
    return any(polygon_collide(quad, goal.polygon) for quad in region)


def _route(road_map: RoadMap, start_lane: int, goal: GoalDefinition) -> tuple[int, ...]:
    """Shortest lane path by lane count, lexicographic tie-break on lane ids."""
    if isinstance(goal, LaneGoal) and goal.lane_id not in road_map.lanes:
        raise MapSemanticError(f"unknown lane {goal.lane_id}")
    frontier = [(start_lane,)]
    visited = {start_lane}
    while frontier:
        for path in frontier:
            lane = road_map.lanes[path[-1]]
            if _lane_satisfies_goal(road_map, lane, goal):
                return path
        nxt = []
        for path in sorted(frontier):
            lane = road_map.lanes[path[-1]]
            edges = sorted(
                set(lane.successors)
                | {n for n in (lane.left_neighbor, lane.right_neighbor) if n is not None}
            )
            for nid in edges:
                if nid not in visited:
                    visited.add(nid)
                    nxt.append(path + (nid,))
        frontier = nxt
    raise NoRouteError(f"no route from lane {start_lane} to the goal")


def compute_road_corridor(road_map: RoadMap, start_lane: int, goal: GoalDefinition) -> RoadCorridor:
    """Corridor an agent follows toward its goal.

    The route may use lateral neighbor hops; the returned corridor covers the
    successor-connected chain through the start lane (reaching the goal via
    sibling corridors is the behavior models' job).
    """
    if start_lane not in road_map.lanes:
        raise MapSemanticError(f"unknown lane {start_lane}")
    route = _route(road_map, start_lane, goal)
    chain = [route[0]]
    for lid in route[1:]:
        if lid in road_map.lanes[chain[-1]].successors:
            chain.append(lid)
        else:
            break
    # Extend the chain alongside the remaining (post-hop) part of the route so
    # the ego corridor is as long as the route it parallels.
    while len(chain) < len(route):
        succ = road_map.lanes[chain[-1]].successors
        if not succ:
            break
        idx = len(chain)
        pick = None
        if idx < len(route):
            target = road_map.lanes[route[idx]]
            for sid in sorted(succ):
                if sid in (target.left_neighbor, target.right_neighbor) or sid == route[idx]:
                    pick = sid
                    break
        if pick is None:
            pick = min(succ)
        if pick in chain:
            break
        chain.append(pick)
    return RoadCorridor(road_map, chain)


def corridor_agent_in_front(
    corridor: RoadCorridor,
    states: Sequence[tuple[int, tuple[float, float]]],
    ego_id: int,
) -> Optional[tuple[int, float]]:
    """Nearest agent ahead of ego on the corridor: (agent id, center-point gap).

    Agents count as on-corridor when their lateral offset is below half the
    local lane width. The gap is the raw arc-length difference; shape
    corrections are applied by behavior models, not here.
    """
    frames = {}
    ego_s = None
    for aid, (x, y) in states:
        s, d = corridor.project(x, y)
        frames[aid] = (s, d)
        if aid == ego_id:
            ego_s = s
    if ego_s is None:
        raise KeyError(f"ego agent {ego_id} not present in states")
    best: Optional[tuple[float, int]] = None
    for aid, (s, d) in frames.items():
        if aid == ego_id:
            continue
        if abs(d) >= corridor.half_width_at(s):
            continue
        if s > ego_s and (best is None or (s, aid) < best):
            best = (s, aid)
    if best is None:
        return None
    return best[1], best[0] - ego_s


def corridor_left(corridor: RoadCorridor) -> Optional[RoadCorridor]:
    return corridor.left_corridor


def corridor_right(corridor: RoadCorridor) -> Optional[RoadCorridor]:
    return corridor.right_corridor
