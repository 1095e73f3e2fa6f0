import pytest

from bbsim.behaviors import ConstantVelocityBehavior, IdmBehavior, IdmParams
from bbsim.geometry import Polygon
from bbsim.roadmap import LaneGoal, compute_road_corridor, parse_map
from bbsim.world import AgentInit, AgentState, World

TWO_LANE_TEXT = """
barkmap 1
lane 1
  left 2
  center 0 0 600 0
end
lane 2
  right 1
  center 0 3.5 600 3.5
end
"""

ONE_LANE_TEXT = "barkmap 1 lane 1 center 0 0 2000 0 end"

CAR = Polygon([(-2.3, -0.9), (2.3, -0.9), (2.3, 0.9), (-2.3, 0.9)])
P1 = IdmParams(v0=5.0, a_max=1.7, tau=1.0, b=1.7, s0=2.0, delta=4.0)


@pytest.fixture(scope="session")
def two_lane_map():
    return parse_map(TWO_LANE_TEXT, "two_lane")


@pytest.fixture(scope="session")
def one_lane_map():
    return parse_map(ONE_LANE_TEXT, "one_lane")


def lane_world(road_map, rows, controlled=None, goal=None, shape=CAR):
    """rows: (id, behavior, lane_id, x, y, v[, theta]) tuples."""
    inits = []
    corridors = {}
    for row in rows:
        aid, behavior, lane_id, x, y, v = row[:6]
        theta = row[6] if len(row) > 6 else 0.0
        g = goal or LaneGoal(lane_id, road_map.lanes[lane_id].center.length * 0.95)
        key = (lane_id, g)
        if key not in corridors:
            corridors[key] = compute_road_corridor(road_map, lane_id, g)
        inits.append(
            AgentInit(aid, AgentState(0.0, x, y, theta, v), shape, behavior, g, corridors[key])
        )
    controlled = controlled if controlled is not None else (rows[0][0],)
    return World.build(0.0, inits, road_map, controlled)
