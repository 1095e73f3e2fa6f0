"""bbsim: deterministic multi-agent driving-behavior simulation and benchmarking.

One behavior-model implementation serves three roles: planning the controlled
agent, predicting other agents inside observed worlds, and forward-simulating
scenarios. Scenario generation, a binary scenario database, evaluators and a
parallel benchmark runner make experiments bit-reproducible across machines.
"""

from . import behaviors as _behaviors  # registers behavior factories
from . import mcts as _mcts  # registers search-based behaviors
from .geometry import (
    FrenetCoord,
    Point2,
    Polygon,
    Polyline,
    point_at_arclength,
    point_in_polygon,
    polygon_collide,
    polygon_contains_polygon,
    polygon_transform,
    project_to_polyline,
)
from .roadmap import (
    GoalRegion,
    LaneGoal,
    RoadCorridor,
    RoadMap,
    compute_road_corridor,
    corridor_agent_in_front,
    corridor_left,
    corridor_right,
    parse_map,
    serialize_map,
)
from .specs import BehaviorSpec, PredictionConfig, build_behavior
from .world import (
    Agent,
    AgentInit,
    AgentState,
    ObservedWorld,
    Trajectory,
    World,
    execute_interpolate,
    observe,
    world_step,
)

__version__ = "0.1.0"
