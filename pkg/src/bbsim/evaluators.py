"""World-state metrics for benchmark termination and in-planner rewards.

All evaluators are read-only functions of the world; re-evaluation is
idempotent and safe to run concurrently.
"""

from __future__ import annotations

import math

from typing import NamedTuple, Union

from .geometry import (
    point_in_polygon,
    polygon_collide,
    polygon_contains_polygon,
    project_to_polyline,
)
from .roadmap import GoalRegion, LaneGoal
from .world import World

COLLISION_ANY = "any"
COLLISION_CONTROLLED = "controlled"


class EvaluationResult(NamedTuple):
    """One evaluator reading: a named boolean, integer or real value."""

    name: str
    value: Union[bool, int, float]


def eval_step_count(world: World) -> int:
    return world.step_index


def eval_goal_reached(world: World, agent_id: int) -> bool:
    """Goal test: center inside the goal region, or on the goal lane past min s."""
    if agent_id not in world.states:
        raise KeyError(f"unknown agent {agent_id}")
    st = world.states[agent_id]
    goal = world.statics[agent_id].goal
    if isinstance(goal, GoalRegion):
        return point_in_polygon((st.x, st.y), goal.polygon)
    if isinstance(goal, LaneGoal):
        lane = world.road_map.lanes[goal.lane_id]
        fc = project_to_polyline(lane.center, (st.x, st.y))
        i = min(range(len(lane.half_widths)), key=lambda k: abs(lane.center.cumlength[k] - fc.s))
        half_width = lane.half_widths[i]
        return abs(fc.d) < half_width and fc.s >= goal.min_arclength
    raise TypeError(f"unsupported goal kind {type(goal).__name__}")


def _pair_collides(world: World, a: int, b: int) -> bool:
    sa = world.states[a]
    sb = world.states[b]
    ra = world.statics[a].shape._radius + math.hypot(*world.statics[a].shape._centroid)
    rb = world.statics[b].shape._radius + math.hypot(*world.statics[b].shape._centroid)
    dx = sa.x - sb.x
    dy = sa.y - sb.y
    rr = ra + rb
    if dx * dx + dy * dy > rr * rr:
        return False
    return polygon_collide(world.agent_polygon(a), world.agent_polygon(b))


def eval_collision(world: World, scope: str = COLLISION_ANY) -> bool:
    """Pairwise transformed-shape intersection; ``controlled`` scope restricts
    pairs to those containing a controlled agent."""
    ids = sorted(world.states)
    controlled = set(world.controlled_ids)
    for i, a in enumerate(ids):
        for b in ids[i + 1 :]:
            if scope == COLLISION_CONTROLLED and a not in controlled and b not in controlled:
                continue
            if _pair_collides(world, a, b):
                return True
    return False


def eval_drivable_area(world: World, agent_id: int) -> bool:
    """True iff the agent's transformed shape lies fully inside its corridor region."""
    if agent_id not in world.states:
        raise KeyError(f"unknown agent {agent_id}")
    corridor = world.statics[agent_id].corridor
    return polygon_contains_polygon(corridor.region, world.agent_polygon(agent_id))


def eval_goal_distance(world: World, agent_id: int) -> float:
    """Euclidean distance to the goal-region centroid (0 inside), or the
    remaining center-line arc length to a lane goal's min-arclength point."""
    if agent_id not in world.states:
        raise KeyError(f"unknown agent {agent_id}")
    st = world.states[agent_id]
    goal = world.statics[agent_id].goal
    if isinstance(goal, GoalRegion):
        if point_in_polygon((st.x, st.y), goal.polygon):
            return 0.0
        c = goal.polygon.centroid
        return math.hypot(st.x - c.x, st.y - c.y)
    if isinstance(goal, LaneGoal):
        lane = world.road_map.lanes[goal.lane_id]
        fc = project_to_polyline(lane.center, (st.x, st.y))
        remaining = goal.min_arclength - fc.s
        return remaining if remaining > 0.0 else 0.0
    raise TypeError(f"unsupported goal kind {type(goal).__name__}")


def evaluate(world: World, name: str, agent_id: int = None, scope: str = COLLISION_ANY) -> EvaluationResult:
    """Run one evaluator by name, for config-driven uses."""
    if name == "step_count":
        return EvaluationResult(name, eval_step_count(world))
    if agent_id is None:
        agent_id = world.controlled_ids[0] if world.controlled_ids else None
    if name == "goal_reached":
        return EvaluationResult(name, eval_goal_reached(world, agent_id))
    if name == "collision":
        return EvaluationResult(name, eval_collision(world, scope))
    if name == "drivable_area":
        return EvaluationResult(name, eval_drivable_area(world, agent_id))
    if name == "goal_distance":
        return EvaluationResult(name, eval_goal_distance(world, agent_id))
    raise KeyError(f"unknown evaluator {name!r}")
