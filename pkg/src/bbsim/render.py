"""Static SVG rendering: world states (with fading past poses) and result charts.

SVG output is deterministic text (fixed float formatting, no timestamps), so
renderings are byte-identical across runs and diffable in golden tests.
"""

from __future__ import annotations

from typing import Optional, Sequence

from .roadmap import GoalRegion, RoadMap
from .world import World

_F = "{:.2f}".format


def _points_attr(pts, tx, ty) -> str:
    return " ".join(f"{_F(tx(x))},{_F(ty(y))}" for x, y in pts)


def render_world_svg(
    road_map: RoadMap,
    snapshots: Sequence[World],
    controlled_id: Optional[int] = None,
    width: int = 900,
) -> str:
    """Render the newest world plus fading past poses of every agent.

    Emits exactly one ``<polygon class="agent...">`` element per agent per
    rendered snapshot; older snapshots are more transparent.
    """
    xs = []
    ys = []
    for lane in road_map.lanes.values():
        for line in (lane.left_boundary, lane.right_boundary):
            for p in line.points:
                xs.append(p.x)
                ys.append(p.y)
    margin = 5.0
    x0, x1 = min(xs) - margin, max(xs) + margin
    y0, y1 = min(ys) - margin, max(ys) + margin
    scale = width / (x1 - x0)
    height = max(int((y1 - y0) * scale), 40)

    def tx(x):
        return (x - x0) * scale

    def ty(y):
        return (y1 - y) * scale

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="#fafafa"/>',
    ]
    for lane_id in sorted(road_map.lanes):
        lane = road_map.lanes[lane_id]
        for line in (lane.left_boundary, lane.right_boundary):
            out.append(
                f'<polyline class="boundary" fill="none" stroke="#888888" stroke-width="1.5" '
                f'points="{_points_attr(line.points, tx, ty)}"/>'
            )
        out.append(
            f'<polyline class="center" fill="none" stroke="#cccccc" stroke-width="1" '
            f'stroke-dasharray="6 6" points="{_points_attr(lane.center.points, tx, ty)}"/>'
        )
    if snapshots:
        current = snapshots[-1]
        drawn_goals = set()
        for aid in sorted(current.statics):
            if controlled_id is not None and aid != controlled_id:
                continue
            goal = current.statics[aid].goal
            if isinstance(goal, GoalRegion) and id(goal) not in drawn_goals:
                drawn_goals.add(id(goal))
                out.append(
                    f'<polygon class="goal" fill="#aaddff" fill-opacity="0.6" stroke="#4499cc" '
                    f'points="{_points_attr(goal.polygon.vertices, tx, ty)}"/>'
                )
        n = len(snapshots)
        for k, world in enumerate(snapshots):
            opacity = 0.15 + 0.85 * (k + 1) / n
            for aid in sorted(world.states):
                poly = world.agent_polygon(aid)
                color = "#3366cc" if aid == controlled_id else "#cc6633"
                out.append(
                    f'<polygon class="agent a{aid}" fill="{color}" fill-opacity="{opacity:.3f}" '
                    f'stroke="#222222" stroke-width="0.5" '
                    f'points="{_points_attr(poly.vertices, tx, ty)}"/>'
                )
    out.append("</svg>")
    return "\n".join(out) + "\n"


_BAR_COLORS = {"success": "#44aa44", "collision": "#cc4444", "max_steps": "#999999"}


def render_chart_svg(summary_rows, width: int = 800, height: int = 360) -> str:
    """Grouped bar chart of success/collision/max-steps percentages per (set, config)."""
    rows = list(summary_rows)
    if not rows:
        raise ValueError("no summary rows to chart")
    pad_left, pad_bottom, pad_top = 50, 70, 20
    plot_w = width - pad_left - 20
    plot_h = height - pad_top - pad_bottom
    group_w = plot_w / len(rows)
    bar_w = min(group_w / 4.0, 28.0)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
    ]
    for pct in (0, 25, 50, 75, 100):
        y = pad_top + plot_h * (1 - pct / 100.0)
        out.append(
            f'<line x1="{pad_left}" y1="{_F(y)}" x2="{width - 20}" y2="{_F(y)}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{pad_left - 8}" y="{_F(y + 4)}" font-size="11" text-anchor="end" '
            f'fill="#444444">{pct}</text>'
        )
    for i, row in enumerate(rows):
        gx = pad_left + i * group_w + group_w / 2.0
        values = (
            ("success", row.success_rate),
            ("collision", row.collision_rate),
            ("max_steps", row.max_steps_rate),
        )
        for j, (name, pct) in enumerate(values):
            h = plot_h * pct / 100.0
            bx = gx + (j - 1.5) * bar_w
            out.append(
                f'<rect class="bar {name}" x="{_F(bx)}" y="{_F(pad_top + plot_h - h)}" '
                f'width="{_F(bar_w)}" height="{_F(h)}" fill="{_BAR_COLORS[name]}"/>'
            )
        label = f"{row.scenario_set}/{row.config_name}"
        out.append(
            f'<text x="{_F(gx)}" y="{height - pad_bottom + 16}" font-size="11" '
            f'text-anchor="middle" fill="#222222">{label}</text>'
        )
    legend_x = pad_left
    for j, (name, color) in enumerate(_BAR_COLORS.items()):
        lx = legend_x + j * 130
        ly = height - 28
        out.append(f'<rect x="{lx}" y="{ly - 10}" width="12" height="12" fill="{color}"/>')
        out.append(
            f'<text x="{lx + 18}" y="{ly}" font-size="12" fill="#222222">{name}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
