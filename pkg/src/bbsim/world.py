"""Ground-truth world state, simultaneous-move stepping and observed worlds.

All world values are immutable: stepping produces a new World, and observed
worlds share structure with their source. Behavior models are functional --
``advanced`` returns the planned trajectory plus the (possibly updated) model
instance -- so snapshots stepped inside a planner can never leak state back
into the ground truth.

Every agent plans from the same pre-step world (strict simultaneous move);
the per-step result is therefore invariant under agent iteration order and
bit-for-bit reproducible.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from typing import Mapping, NamedTuple, Optional, Sequence, Union

from .geometry import Polygon, wrap_angle
from .roadmap import RoadCorridor, RoadMap
from .specs import DEFAULT_PREDICTION, PredictionConfig, build_behavior


class AgentState(NamedTuple):
    t: float
    x: float
    y: float
    theta: float
    v: float


class Trajectory(NamedTuple):
    """Time-ordered desired future states; first sample sits at planning time."""

    states: tuple[AgentState, ...]


class BehaviorContractError(RuntimeError):
    """A behavior model violated its output contract (coverage, monotone time, v >= 0)."""


def validate_trajectory(traj: Trajectory, t_plan: float, t_end: float, agent_id) -> None:
    states = traj.states
    if len(states) < 2:
        raise BehaviorContractError(f"agent {agent_id}: trajectory needs >= 2 states")
    if abs(states[0].t - t_plan) > 1e-9:
        raise BehaviorContractError(
            f"agent {agent_id}: trajectory starts at {states[0].t}, not planning time {t_plan}"
        )
    prev = states[0].t
    for st in states[1:]:
        if st.t <= prev:
            raise BehaviorContractError(f"agent {agent_id}: trajectory times not strictly increasing")
        prev = st.t
    if states[-1].t < t_end - 1e-9:
        raise BehaviorContractError(
            f"agent {agent_id}: trajectory ends at {states[-1].t}, does not cover {t_end}"
        )
    for st in states:
        if st.v < 0.0:
            raise BehaviorContractError(f"agent {agent_id}: negative velocity in trajectory")


def execute_interpolate(traj: Trajectory, t_next: float) -> AgentState:
    """State at ``t_next``, linearly interpolated between bracketing samples.

    Heading interpolates along the shortest angular arc; an exact sample time
    returns that sample unchanged. Velocity is clamped at zero from below.
    """
    states = traj.states
    if t_next < states[0].t - 1e-12 or t_next > states[-1].t + 1e-12:
        raise ValueError(f"t={t_next} outside trajectory span [{states[0].t}, {states[-1].t}]")
    times = [s.t for s in states]
    i = bisect_right(times, t_next)
    if i > 0 and times[i - 1] == t_next:
        return states[i - 1]
    if i >= len(states):
        return states[-1]
    a = states[i - 1]
    b = states[i]
    f = (t_next - a.t) / (b.t - a.t)
    theta = wrap_angle(a.theta + f * wrap_angle(b.theta - a.theta))
    v = a.v + f * (b.v - a.v)
    if v < 0.0:
        v = 0.0
    return AgentState(t_next, a.x + f * (b.x - a.x), a.y + f * (b.y - a.y), theta, v)


class InterpolationExecution:
    """Exact-tracking execution model: the agent lands on its planned trajectory."""

    def execute(self, traj: Trajectory, t_next: float) -> AgentState:
        return execute_interpolate(traj, t_next)

    def __eq__(self, other) -> bool:
        return type(other) is type(self)

    def __hash__(self):
        return hash(type(self))


_EXECUTION = InterpolationExecution()


class AgentStatic(NamedTuple):
    """Per-agent data that never changes during a run."""

    id: int
    shape: Polygon  # body frame
    half_length: float
    goal: object
    corridor: RoadCorridor
    prediction: Optional[PredictionConfig]
    execution: InterpolationExecution


class Agent(NamedTuple):
    """Read view of one agent: kinematic state plus its models and goal."""

    id: int
    state: AgentState
    shape: Polygon
    behavior: object
    execution: object
    goal: object
    corridor: RoadCorridor


class AgentInit(NamedTuple):
    id: int
    state: AgentState
    shape: Polygon
    behavior: object
    goal: object
    corridor: RoadCorridor
    prediction: Optional[PredictionConfig] = None
    execution: Optional[InterpolationExecution] = None


class World:
    """Multi-agent world at one discrete time; immutable after construction."""

    __slots__ = (
        "time",
        "step_index",
        "statics",
        "states",
        "behaviors",
        "road_map",
        "controlled_ids",
        "_fcache",
        "_agents_view",
        "_fused_kind",
    )

    def __init__(self, time, step_index, statics, states, behaviors, road_map, controlled_ids):
        self.time = time
        self.step_index = step_index
        self.statics = statics
        self.states = states
        self.behaviors = behaviors
        self.road_map = road_map
        self.controlled_ids = controlled_ids
        self._fcache = {}
        self._agents_view = None
        self._fused_kind = None  # stepping-path classification cache

    @classmethod
    def build(
        cls,
        time: float,
        agents: Sequence[AgentInit],
        road_map: RoadMap,
        controlled_ids: Sequence[int] = (),
    ) -> "World":
        statics = {}
        states = {}
        behaviors = {}
        for a in agents:
            if a.id in statics:
                raise ValueError(f"duplicate agent id {a.id}")
            st = a.state
            if st.t != time:
                raise ValueError(f"agent {a.id}: state time {st.t} != world time {time}")
            if not (st.v >= 0.0 and math.isfinite(st.v) and math.isfinite(st.x)):
                raise ValueError(f"agent {a.id}: invalid state {st}")
            xs = [p.x for p in a.shape.vertices]
            statics[a.id] = AgentStatic(
                a.id,
                a.shape,
                (max(xs) - min(xs)) / 2.0,
                a.goal,
                a.corridor,
                a.prediction,
                a.execution or _EXECUTION,
            )
            states[a.id] = st
            behaviors[a.id] = a.behavior
        return cls(time, 0, statics, states, behaviors, road_map, tuple(controlled_ids))

    @property
    def agents(self) -> dict[int, Agent]:
        view = self._agents_view
        if view is None:
            view = {
                aid: Agent(
                    aid,
                    self.states[aid],
                    st.shape,
                    self.behaviors[aid],
                    st.execution,
                    st.goal,
                    st.corridor,
                )
                for aid, st in self.statics.items()
            }
            self._agents_view = view
        return view

    def agent_polygon(self, agent_id: int) -> Polygon:
        """Agent shape transformed to its current pose (skips re-validation)."""
        st = self.states[agent_id]
        shape = self.statics[agent_id].shape
        c = math.cos(st.theta)
        s = math.sin(st.theta)
        x = st.x
        y = st.y
        verts = tuple(
            (x + c * px - s * py, y + s * px + c * py) for px, py in shape.vertices
        )
        poly = object.__new__(Polygon)
        poly.vertices = verts
        cx, cy = shape._centroid
        poly._centroid = type(shape._centroid)(x + c * cx - s * cy, y + s * cx + c * cy)
        poly._radius = shape._radius
        return poly

    def corridor_ordering(self, corridor: RoadCorridor):
        """Shared per-step Frenet frames of every agent relative to ``corridor``.

        Returns (frames, ordered): frames maps agent id -> (s, d); ordered is
        the (s, id)-sorted list of agents lying on the corridor (|d| < half
        width). Cached per corridor instance for the lifetime of this world.
        """
        key = id(corridor)
        entry = self._fcache.get(key)
        if entry is None:
            frames = {}
            on_corridor = []
            seg = corridor._single_seg
            const_hw = corridor._const_hw
            if seg is not None and const_hw is not None:
                ax, ay, ux, uy, length = seg
                for aid, st in self.states.items():
                    rx = st.x - ax
                    ry = st.y - ay
                    s = rx * ux + ry * uy
                    if s < 0.0:
                        s = 0.0
                    elif s > length:
                        s = length
                    d = -uy * rx + ux * ry
                    frames[aid] = (s, d)
                    if -const_hw < d < const_hw:
                        on_corridor.append((s, aid))
            else:
                proj = corridor.project
                hw = corridor.half_width_at
                for aid, st in self.states.items():
                    s, d = proj(st.x, st.y)
                    frames[aid] = (s, d)
                    half = hw(s)
                    if -half < d < half:
                        on_corridor.append((s, aid))
            on_corridor.sort()
            entry = (frames, on_corridor)
            self._fcache[key] = entry
        return entry

    def front_agent(self, corridor: RoadCorridor, ego_id: int):
        """(agent id, center gap) of the nearest on-corridor agent ahead, or None."""
        frames, ordered = self.corridor_ordering(corridor)
        s_ego = frames[ego_id][0]
        i = bisect_right(ordered, (s_ego, 1 << 62))
        if i < len(ordered):
            s, aid = ordered[i]
            return aid, s - s_ego
        return None

    def rear_agent(self, corridor: RoadCorridor, ego_id: int):
        """(agent id, center gap) of the nearest on-corridor agent behind, or None."""
        frames, ordered = self.corridor_ordering(corridor)
        s_ego = frames[ego_id][0]
        i = bisect_right(ordered, (s_ego, -1)) - 1
        if i >= 0:
            s, aid = ordered[i]
            if s < s_ego:
                return aid, s_ego - s
        return None

    def with_behaviors(self, replacements: Mapping[int, object]) -> "World":
        behaviors = {**self.behaviors, **replacements}
        return World(
            self.time,
            self.step_index,
            self.statics,
            self.states,
            behaviors,
            self.road_map,
            self.controlled_ids,
        )

    def state_table(self) -> tuple:
        """Canonical (id, state) tuple, e.g. for bit-exact sequence comparisons."""
        return tuple((aid, self.states[aid]) for aid in sorted(self.states))

    def __repr__(self) -> str:
        return f"World(t={self.time}, step={self.step_index}, agents={sorted(self.states)})"


class ObservedWorld:
    """The world as perceived by one agent.

    The observer keeps its own behavior model; every other agent's model in
    ``snapshot`` is constructed fresh from the prediction configuration and is
    never the ground-truth instance. Construction is lazy so state-only
    queries (leader lookups etc.) stay cheap.
    """

    __slots__ = ("world", "observer_id", "prediction", "_snapshot")

    def __init__(self, world: World, observer_id: int, prediction: PredictionConfig):
        self.world = world
        self.observer_id = observer_id
        self.prediction = prediction
        self._snapshot = None

    @property
    def time(self) -> float:
        return self.world.time

    @property
    def ego_state(self) -> AgentState:
        return self.world.states[self.observer_id]

    @property
    def ego_static(self) -> AgentStatic:
        return self.world.statics[self.observer_id]

    @property
    def snapshot(self) -> World:
        """World copy with other agents' models substituted per the prediction config."""
        snap = self._snapshot
        if snap is None:
            replacements = {}
            for aid in self.world.states:
                if aid != self.observer_id:
                    replacements[aid] = build_behavior(self.prediction.model_spec_for(aid))
            snap = self.world.with_behaviors(replacements)
            self._snapshot = snap
        return snap


def observe(world: World, observer_id: int, cfg: Optional[PredictionConfig] = None) -> ObservedWorld:
    """Agent-perspective view of ``world`` for ``observer_id``."""
    if observer_id not in world.states:
        raise KeyError(f"unknown observer id {observer_id}")
    return ObservedWorld(world, observer_id, cfg or DEFAULT_PREDICTION)


def _resolve_cfg(cfgs, world: World, agent_id: int) -> PredictionConfig:
    if cfgs is None:
        cfg = None
    elif isinstance(cfgs, PredictionConfig):
        cfg = cfgs
    else:
        cfg = cfgs.get(agent_id)
    if cfg is None:
        cfg = world.statics[agent_id].prediction
    return cfg or DEFAULT_PREDICTION


# Installed by the behaviors module: a whole-step fast path for worlds where
# every agent runs a built-in car-following model. Returns None when it does
# not apply; its output is bit-identical to the general loop below (covered
# by an equivalence test).
_fused_step_hook = None


def world_step(
    world: World,
    dt: float,
    cfgs: Union[None, PredictionConfig, Mapping[int, PredictionConfig]] = None,
) -> World:
    """Advance all agents simultaneously by ``dt`` and return the next world.

    Every agent's behavior is computed against the same pre-step world; the
    execution model then produces its state at ``time + dt``. ``cfgs`` supplies
    per-agent prediction configurations for the observed worlds (falling back
    to each agent's own configuration, then to constant-velocity prediction).
    """
    if not dt > 0.0:
        raise ValueError("world_step requires dt > 0")
    if _fused_step_hook is not None:
        fused = _fused_step_hook(world, dt)
        if fused is not None:
            return fused
    t_next = world.time + dt
    statics = world.statics
    new_states = {}
    changed = None
    aid = None
    try:
        for aid, behavior in world.behaviors.items():
            fast = behavior.fast_step
            if fast is not None:
                new_state, new_behavior = fast(world, aid, dt)
            else:
                obs = ObservedWorld(world, aid, _resolve_cfg(cfgs, world, aid))
                traj, new_behavior = behavior.advanced(dt, obs)
                validate_trajectory(traj, world.time, t_next, aid)
                new_state = statics[aid].execution.execute(traj, t_next)
            new_states[aid] = new_state
            if new_behavior is not behavior:
                if changed is None:
                    changed = {}
                changed[aid] = new_behavior
    except ValueError as exc:
        # A model raising a range/contract error mid-run is a behavior
        # contract violation attributed to the agent being planned.
        raise BehaviorContractError(f"agent {aid}: {exc}") from exc
    behaviors = {**world.behaviors, **changed} if changed else world.behaviors
    return World(
        t_next,
        world.step_index + 1,
        statics,
        new_states,
        behaviors,
        world.road_map,
        world.controlled_ids,
    )
