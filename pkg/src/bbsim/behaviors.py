"""Behavior models: the planning interface plus all closed-form implementations.

Each model maps an observed world to a desired future state trajectory and is
reusable for ego planning, prediction of other agents and forward simulation.
Models are functional: ``advanced`` returns the trajectory together with the
(possibly updated) model instance, so planners can branch world snapshots
without state leaking between branches. ``plan`` never commits memory.

Models that qualify also provide ``fast_step`` -- a fused plan+execute kernel
used by the world stepper. It performs exactly the same float operations as
the plan/execute route and is covered by an equivalence test.

Lateral dynamics (shared by lane-keeping and lane changes):
  * keeping: exponential settle onto the corridor center, d(t) = d0*exp(-t/1s)
  * changing: cubic ramp toward the target center over a 3 s horizon
Longitudinal integration uses semi-implicit Euler at substep h = min(dt, 0.05s);
the preceding vehicle is assumed to hold constant velocity within a step.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from enum import IntEnum
from typing import NamedTuple, Optional

from .geometry import point_at_arclength, wrap_angle
from .roadmap import RoadCorridor
from .specs import BehaviorSpec, register_behavior_kind
from .world import AgentState, Trajectory, World

T_LATERAL_KEEP = 1.0
T_LATERAL_CHANGE = 3.0
LANE_CHANGE_DONE_OFFSET = 0.1
EMERGENCY_GAP = 0.1

KEEP_LANE = "keep"
CHANGE_LEFT = "change_left"
CHANGE_RIGHT = "change_right"

class BehaviorModel:
    """Planning interface: ``plan(dt, observed) -> Trajectory``."""

    fast_step = None

    def plan(self, dt: float, observed) -> Trajectory:
        raise NotImplementedError

    def advanced(self, dt: float, observed):
        """Plan and return (trajectory, next model instance)."""
        return self.plan(dt, observed), self

# --- integration schedule ----------------------------------------------------

_SCHEDULES: dict[float, tuple[tuple[float, ...], tuple[float, ...]]] = {}

def substep_schedule(dt: float) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """(relative sample times, substep durations); the last sample lands on dt."""
    sched = _SCHEDULES.get(dt)
    if sched is None:
        h = dt if dt < 0.05 else 0.05
        n = max(1, int(math.ceil(dt / h - 1e-12)))
        rels = [i * h for i in range(1, n)]
        rels.append(dt)
        durs = [rels[0]]
        for i in range(1, n):
            durs.append(rels[i] - rels[i - 1])
        sched = (tuple(rels), tuple(durs))
        _SCHEDULES[dt] = sched
    return sched

# --- lateral laws ------------------------------------------------------------

def _lat_keep(d0: float, r: float) -> tuple[float, float]:
    if d0 == 0.0:
        return 0.0, 0.0
    d = d0 * math.exp(-r / T_LATERAL_KEEP)
    return d, -d / T_LATERAL_KEEP

def _lat_ramp(d0: float, u: float) -> tuple[float, float]:
    if u >= 1.0:
        return 0.0, 0.0
    d = d0 * (1.0 + u * u * (2.0 * u - 3.0))
    return d, d0 * 6.0 * u * (u - 1.0) / T_LATERAL_CHANGE

def _frenet_state(corridor, t_abs, s, v, d, ld) -> AgentState:
    length = corridor.center.length
    if s > length:
        s = length
    seg = corridor._single_seg
    if seg is not None:
        ax, ay, ux, uy, _L = seg
        x = ax + ux * s - uy * d
        y = ay + uy * s + ux * d
        heading, wrapped = corridor._seg1_heading
        theta = wrapped if ld == 0.0 else wrap_angle(heading + math.atan2(ld, v))
        return AgentState(t_abs, x, y, theta, v)
    p, heading = point_at_arclength(corridor.center, s, d)
    theta = wrap_angle(heading) if ld == 0.0 else wrap_angle(heading + math.atan2(ld, v))
    return AgentState(t_abs, p.x, p.y, theta, v)

# --- IDM ---------------------------------------------------------------------

class IdmParams(NamedTuple):
    v0: float = 15.0  # desired velocity [m/s]
    a_max: float = 1.7  # maximum acceleration [m/s^2]
    tau: float = 1.0  # time gap [s]
    b: float = 1.7  # comfortable deceleration [m/s^2]
    s0: float = 2.0  # minimum distance [m]
    delta: float = 4.0  # acceleration exponent

def idm_acceleration(p: IdmParams, v: float, lead: Optional[tuple[float, float]]) -> float:
    """Car-following acceleration; ``lead`` is (leader velocity, net gap) or None.

    a = a_max * [1 - (v/v0)^delta - (s*/gap)^2]
    s* = s0 + max(0, v*tau + v*(v - v_lead) / (2*sqrt(a_max*b)))

    A degenerate gap <= 0.1 m maps to the emergency value -10*a_max.
    """
    free = p.a_max * (1.0 - (v / p.v0) ** p.delta)
    if lead is None:
        return free
    v_lead, gap = lead
    if gap <= EMERGENCY_GAP:
        return -10.0 * p.a_max
    s_star = p.s0 + max(0.0, v * p.tau + v * (v - v_lead) / (2.0 * math.sqrt(p.a_max * p.b)))
    return free - p.a_max * (s_star / gap) ** 2

def _idm_integrate(p: IdmParams, v, gap, v_lead, has_lead, durs, collect):
    """Semi-implicit Euler car-following integration over the substep schedule.

    Returns per-substep (v, distance so far) samples when ``collect`` else the
    final (v, distance).
    """
    two_sqrt_ab = 2.0 * math.sqrt(p.a_max * p.b)
    inv_v0 = 1.0 / p.v0
    a_max = p.a_max
    tau = p.tau
    s0 = p.s0
    delta = p.delta
    pow4 = delta == 4.0
    ds = 0.0
    out = [] if collect else None
    for h in durs:
        if pow4:
            u = v * inv_v0
            u *= u
            u *= u
        else:
            u = (v * inv_v0) ** delta
        if has_lead:
            if gap <= EMERGENCY_GAP:
                a = -10.0 * a_max
            else:
                s_star = v * tau + v * (v - v_lead) / two_sqrt_ab
                if s_star < 0.0:
                    s_star = 0.0
                s_star += s0
                ratio = s_star / gap
                a = a_max * (1.0 - u - ratio * ratio)
        else:
            a = a_max * (1.0 - u)
        v += a * h
        if v < 0.0:
            v = 0.0
        ds += v * h
        if has_lead:
            gap += (v_lead - v) * h
        if collect:
            out.append((v, ds))
    if collect:
        return out
    return v, ds

class IdmBehavior(BehaviorModel):
    """Lane following along the agent's corridor using the IDM acceleration law."""

    __slots__ = ("params", "_two_sqrt_ab", "_inv_v0")
    kind = "idm"

    def __init__(self, params: IdmParams = IdmParams()):
        self.params = params
        self._two_sqrt_ab = 2.0 * math.sqrt(params.a_max * params.b)
        self._inv_v0 = 1.0 / params.v0

    def _drive(self, world: World, aid: int, dt: float, collect: bool):
        statics = world.statics
        static = statics[aid]
        corridor = static.corridor
        st = world.states[aid]
        frames, ordered = world.corridor_ordering(corridor)
        s_ego, d_ego = frames[aid]
        # Leader: first on-corridor agent strictly ahead of the ego.
        i = bisect_right(ordered, (s_ego, 1 << 62))
        if i < len(ordered):
            s_lead, lid = ordered[i]
            gap = (s_lead - s_ego) - statics[lid].half_length - static.half_length
            v_lead = world.states[lid].v
            has_lead = True
        else:
            gap = v_lead = 0.0
            has_lead = False
        rels, durs = substep_schedule(dt)
        t0 = world.time
        if not collect:
            v_end, ds_end = _idm_integrate(self.params, st.v, gap, v_lead, has_lead, durs, False)
            r = rels[-1]
            d, ld = _lat_keep(d_ego, r)
            return _frenet_state(corridor, t0 + r, s_ego + ds_end, v_end, d, ld)
        samples = _idm_integrate(self.params, st.v, gap, v_lead, has_lead, durs, True)
        states = [st]
        for r, (v_i, ds_i) in zip(rels, samples):
            d, ld = _lat_keep(d_ego, r)
            states.append(_frenet_state(corridor, t0 + r, s_ego + ds_i, v_i, d, ld))
        return states

    def plan(self, dt: float, observed) -> Trajectory:
        return Trajectory(tuple(self._drive(observed.world, observed.observer_id, dt, True)))

    def fast_step(self, world: World, aid: int, dt: float):
        return self._drive(world, aid, dt, False), self

# --- constant velocity --------------------------------------------------------

class ConstantVelocityBehavior(BehaviorModel):
    """Straight-line motion at the current speed along the current heading."""

    __slots__ = ()
    kind = "const_vel"

    def _end_state(self, st: AgentState, dt: float) -> AgentState:
        return AgentState(
            st.t + dt,
            st.x + st.v * math.cos(st.theta) * dt,
            st.y + st.v * math.sin(st.theta) * dt,
            st.theta,
            st.v,
        )

    def plan(self, dt: float, observed) -> Trajectory:
        st = observed.ego_state
        return Trajectory((st, self._end_state(st, dt)))

    def fast_step(self, world: World, aid: int, dt: float):
        return self._end_state(world.states[aid], dt), self

# --- maneuver primitives (lane keep / change at fixed acceleration) -----------

class ManeuverKind(IntEnum):
    LANE_KEEP_CV = 0
    LANE_KEEP_CA = 1
    LANE_KEEP_CD = 2
    CHANGE_LEFT = 3
    CHANGE_RIGHT = 4

class ManeuverAction(NamedTuple):
    kind: ManeuverKind
    accel: float

def maneuver_set(a_std: float, kinds=None) -> tuple[ManeuverAction, ...]:
    """The discrete maneuver enumeration in its fixed index order."""
    accel = {
        ManeuverKind.LANE_KEEP_CV: 0.0,
        ManeuverKind.LANE_KEEP_CA: a_std,
        ManeuverKind.LANE_KEEP_CD: -a_std,
        ManeuverKind.CHANGE_LEFT: 0.0,
        ManeuverKind.CHANGE_RIGHT: 0.0,
    }
    kinds = tuple(kinds) if kinds is not None else tuple(ManeuverKind)
    return tuple(ManeuverAction(k, accel[k]) for k in kinds)

def _const_accel_integrate(a, v, durs, collect):
    ds = 0.0
    out = [] if collect else None
    for h in durs:
        v += a * h
        if v < 0.0:
            v = 0.0
        ds += v * h
        if collect:
            out.append((v, ds))
    if collect:
        return out
    return v, ds

class ManeuverBehavior(BehaviorModel):
    """One maneuver primitive applied along a target corridor.

    A change maneuver without the corresponding sibling corridor degrades to
    lane-keep at constant velocity (``effective_kind`` records the
    substitution). Change maneuvers follow a time-based cubic ramp anchored
    at first application, so an action simulated as several world steps keeps
    one continuous lateral profile.
    """

    __slots__ = ("action", "target", "effective_kind", "changing", "ramp_t0", "ramp_d0")

    def __init__(self, action: ManeuverAction, base_target: RoadCorridor):
        self.action = action
        kind = action.kind
        if kind == ManeuverKind.CHANGE_LEFT:
            sibling = base_target.left_corridor
        elif kind == ManeuverKind.CHANGE_RIGHT:
            sibling = base_target.right_corridor
        else:
            sibling = None
        if kind in (ManeuverKind.CHANGE_LEFT, ManeuverKind.CHANGE_RIGHT):
            if sibling is None:
                self.target = base_target
                self.effective_kind = ManeuverKind.LANE_KEEP_CV
                self.changing = False
            else:
                self.target = sibling
                self.effective_kind = kind
                self.changing = True
        else:
            self.target = base_target
            self.effective_kind = kind
            self.changing = False
        self.ramp_t0 = None
        self.ramp_d0 = None

    def _with_ramp(self, ramp_t0: float, ramp_d0: float) -> "ManeuverBehavior":
        clone = object.__new__(ManeuverBehavior)
        clone.action = self.action
        clone.target = self.target
        clone.effective_kind = self.effective_kind
        clone.changing = self.changing
        clone.ramp_t0 = ramp_t0
        clone.ramp_d0 = ramp_d0
        return clone

    def _drive(self, world: World, aid: int, dt: float, collect: bool):
        corridor = self.target
        st = world.states[aid]
        frames, _ = world.corridor_ordering(corridor)
        s_ego, d_ego = frames[aid]
        accel = self.action.accel if self.effective_kind == self.action.kind else 0.0
        rels, durs = substep_schedule(dt)
        t0 = world.time
        changing = self.changing
        if changing:
            ramp_t0 = self.ramp_t0 if self.ramp_t0 is not None else t0
            ramp_d0 = self.ramp_d0 if self.ramp_d0 is not None else d_ego
        else:
            ramp_t0 = ramp_d0 = 0.0
        if not collect:
            v_end, ds_end = _const_accel_integrate(accel, st.v, durs, False)
            r = rels[-1]
            if changing:
                d, ld = _lat_ramp(ramp_d0, (t0 + r - ramp_t0) / T_LATERAL_CHANGE)
            else:
                d, ld = _lat_keep(d_ego, r)
            return _frenet_state(corridor, t0 + r, s_ego + ds_end, v_end, d, ld), ramp_t0, ramp_d0
        samples = _const_accel_integrate(accel, st.v, durs, True)
        states = [st]
        for r, (v_i, ds_i) in zip(rels, samples):
            if changing:
                d, ld = _lat_ramp(ramp_d0, (t0 + r - ramp_t0) / T_LATERAL_CHANGE)
            else:
                d, ld = _lat_keep(d_ego, r)
            states.append(_frenet_state(corridor, t0 + r, s_ego + ds_i, v_i, d, ld))
        return states, ramp_t0, ramp_d0

    def _next_instance(self, ramp_t0, ramp_d0) -> "ManeuverBehavior":
        if self.changing and self.ramp_t0 is None:
            return self._with_ramp(ramp_t0, ramp_d0)
        return self

    def plan(self, dt: float, observed) -> Trajectory:
        states, _, _ = self._drive(observed.world, observed.observer_id, dt, True)
        return Trajectory(tuple(states))

    def advanced(self, dt: float, observed):
        states, ramp_t0, ramp_d0 = self._drive(observed.world, observed.observer_id, dt, True)
        return Trajectory(tuple(states)), self._next_instance(ramp_t0, ramp_d0)

    def fast_step(self, world: World, aid: int, dt: float):
        state, ramp_t0, ramp_d0 = self._drive(world, aid, dt, False)
        return state, self._next_instance(ramp_t0, ramp_d0)

# --- MOBIL ---------------------------------------------------------------------

class MobilParams(NamedTuple):
    politeness: float = 0.0  # p in [0, 1]
    a_threshold: float = 0.1  # incentive threshold [m/s^2]
    b_safe: float = 3.4  # safe braking limit for the new follower [m/s^2]
    idm: IdmParams = IdmParams()

class _MobilMemory(NamedTuple):
    target: Optional[RoadCorridor]  # committed corridor (None: agent's own)
    ramp_t0: Optional[float]
    ramp_d0: Optional[float]

def _net_gap(world: World, corridor: RoadCorridor, rear_id: int, front_id: int) -> float:
    frames, _ = world.corridor_ordering(corridor)
    gap = frames[front_id][0] - frames[rear_id][0]
    return gap - world.statics[front_id].half_length - world.statics[rear_id].half_length

def _follow_accel(world, p: IdmParams, corridor, ego_id, front) -> float:
    v = world.states[ego_id].v
    if front is None:
        return idm_acceleration(p, v, None)
    fid, _gap = front
    return idm_acceleration(p, v, (world.states[fid].v, _net_gap(world, corridor, ego_id, fid)))

def mobil_decide(params: MobilParams, observed, corridor: Optional[RoadCorridor] = None) -> str:
    """Lane-change decision: safety veto on the new follower, then incentive gain.

    Returns one of KEEP_LANE / CHANGE_LEFT / CHANGE_RIGHT; simultaneous
    qualification prefers the left change.
    """
    world = observed.world
    ego = observed.observer_id
    p = params.idm
    cur = corridor if corridor is not None else world.statics[ego].corridor
    ego_front = world.front_agent(cur, ego)
    a_ego = _follow_accel(world, p, cur, ego, ego_front)
    old_follower = world.rear_agent(cur, ego)

    results = {}
    for direction, side in ((CHANGE_LEFT, cur.left_corridor), (CHANGE_RIGHT, cur.right_corridor)):
        if side is None:
            continue
        new_front = world.front_agent(side, ego)
        new_follower = world.rear_agent(side, ego)
        a_ego_new = _follow_accel(world, p, side, ego, new_front)
        # Safety: the new follower must not be forced below -b_safe.
        if new_follower is not None:
            nf = new_follower[0]
            v_nf = world.states[nf].v
            a_nf_new = idm_acceleration(p, v_nf, (world.states[ego].v, _net_gap(world, side, nf, ego)))
            if a_nf_new < -params.b_safe:
                continue
            a_nf_old = _follow_accel(world, p, side, nf, new_front)
        else:
            a_nf_new = a_nf_old = 0.0
        if old_follower is not None:
            of = old_follower[0]
            a_of_old = _follow_accel(world, p, cur, of, (ego, 0.0))
            a_of_new = _follow_accel(world, p, cur, of, ego_front)
        else:
            a_of_old = a_of_new = 0.0
        incentive = (a_ego_new - a_ego) + params.politeness * (
            (a_nf_new - a_nf_old) + (a_of_new - a_of_old)
        )
        if incentive > params.a_threshold:
            results[direction] = incentive
    if CHANGE_LEFT in results:
        return CHANGE_LEFT
    if CHANGE_RIGHT in results:
        return CHANGE_RIGHT
    return KEEP_LANE

class MobilBehavior(BehaviorModel):
    """IDM longitudinal control plus MOBIL-triggered lane changes.

    Memory: the committed target corridor and the active change ramp. A change
    persists until the lateral offset to the new center drops below 0.1 m;
    afterwards the target corridor becomes the base for further decisions.
    """

    __slots__ = ("params", "memory")
    kind = "mobil"

    def __init__(self, params: MobilParams = MobilParams(), memory: _MobilMemory = _MobilMemory(None, None, None)):
        self.params = params
        self.memory = memory

    def _plan_with_memory(self, dt: float, observed):
        world = observed.world
        ego = observed.observer_id
        static = world.statics[ego]
        memory = self.memory
        base = memory.target if memory.target is not None else static.corridor
        frames, _ = world.corridor_ordering(base)
        d_cur = frames[ego][1]
        ramping = memory.ramp_t0 is not None
        if ramping and abs(d_cur) < LANE_CHANGE_DONE_OFFSET:
            memory = _MobilMemory(memory.target, None, None)
            ramping = False
        if not ramping:
            decision = mobil_decide(self.params, observed, base)
            if decision != KEEP_LANE:
                side = base.left_corridor if decision == CHANGE_LEFT else base.right_corridor
                side_frames, _ = world.corridor_ordering(side)
                memory = _MobilMemory(side, world.time, side_frames[ego][1])
                ramping = True
        target = memory.target if memory.target is not None else static.corridor

        # Longitudinal: IDM against the target corridor's front agent.
        st = world.states[ego]
        t_frames, _ = world.corridor_ordering(target)
        s_ego, d_ego = t_frames[ego]
        front = world.front_agent(target, ego)
        if front is not None:
            fid, center_gap = front
            gap = center_gap - world.statics[fid].half_length - static.half_length
            v_lead = world.states[fid].v
            has_lead = True
        else:
            gap = v_lead = 0.0
            has_lead = False
        rels, durs = substep_schedule(dt)
        samples = _idm_integrate(self.params.idm, st.v, gap, v_lead, has_lead, durs, True)
        t0 = world.time
        states = [st]
        for r, (v_i, ds_i) in zip(rels, samples):
            if ramping:
                # Time-based ramp: continuous across re-planning steps.
                u = (t0 + r - memory.ramp_t0) / T_LATERAL_CHANGE
                d, ld = _lat_ramp(memory.ramp_d0, u)
            else:
                d, ld = _lat_keep(d_ego, r)
            states.append(_frenet_state(target, t0 + r, s_ego + ds_i, v_i, d, ld))
        return Trajectory(tuple(states)), memory

    def plan(self, dt: float, observed) -> Trajectory:
        return self._plan_with_memory(dt, observed)[0]

    def advanced(self, dt: float, observed):
        traj, memory = self._plan_with_memory(dt, observed)
        if memory is self.memory:
            return traj, self
        return traj, MobilBehavior(self.params, memory)

# --- dataset tracking -----------------------------------------------------------

class TrackRecord(NamedTuple):
    """Recorded trajectory samples of one agent (times strictly increasing)."""

    track_id: int
    t: tuple[float, ...]
    x: tuple[float, ...]
    y: tuple[float, ...]
    theta: tuple[float, ...]
    v: tuple[float, ...]
    length: float
    width: float

    @classmethod
    def from_samples(cls, track_id: int, samples, length: float, width: float) -> "TrackRecord":
        rows = sorted(samples)
        if len(rows) < 2:
            raise ValueError(f"track {track_id}: needs at least 2 samples")
        ts = tuple(r[0] for r in rows)
        for a, b in zip(ts, ts[1:]):
            if b <= a:
                raise ValueError(f"track {track_id}: times not strictly increasing")
        return cls(
            track_id,
            ts,
            tuple(r[1] for r in rows),
            tuple(r[2] for r in rows),
            tuple(r[3] for r in rows),
            tuple(r[4] for r in rows),
            length,
            width,
        )

    def state_at(self, track_time: float) -> AgentState:
        """Linear interpolation of the recording; held with v = 0 past the end."""
        ts = self.t
        if track_time < ts[0] - 1e-9:
            raise ValueError(
                f"track {self.track_id}: time {track_time} before recording start {ts[0]}"
            )
        if track_time > ts[-1]:
            return AgentState(track_time, self.x[-1], self.y[-1], self.theta[-1], 0.0)
        i = bisect_right(ts, track_time)
        if i > 0 and ts[i - 1] == track_time:
            return AgentState(track_time, self.x[i - 1], self.y[i - 1], self.theta[i - 1], self.v[i - 1])
        a, b = i - 1, i
        f = (track_time - ts[a]) / (ts[b] - ts[a])
        theta = wrap_angle(self.theta[a] + f * wrap_angle(self.theta[b] - self.theta[a]))
        v = self.v[a] + f * (self.v[b] - self.v[a])
        return AgentState(
            track_time,
            self.x[a] + f * (self.x[b] - self.x[a]),
            self.y[a] + f * (self.y[b] - self.y[a]),
            theta,
            v if v > 0.0 else 0.0,
        )

class TrackBehavior(BehaviorModel):
    """Replays a recorded track; world time 0 maps to track time ``offset``."""

    __slots__ = ("record", "offset")
    kind = "track"

    def __init__(self, record: TrackRecord, offset: float = 0.0):
        self.record = record
        self.offset = offset

    def _state_at_world_time(self, t_world: float) -> AgentState:
        st = self.record.state_at(t_world + self.offset)
        return AgentState(t_world, st.x, st.y, st.theta, st.v)

    def plan(self, dt: float, observed) -> Trajectory:
        t0 = observed.time
        rels, _ = substep_schedule(dt)
        states = [self._state_at_world_time(t0)]
        states.extend(self._state_at_world_time(t0 + r) for r in rels)
        return Trajectory(tuple(states))

    def fast_step(self, world: World, aid: int, dt: float):
        rels, _ = substep_schedule(dt)
        return self._state_at_world_time(world.time + rels[-1]), self

# --- lookup-table policy stub ---------------------------------------------------

class PolicyStubBehavior(BehaviorModel):
    """Table-lookup policy demonstrating how an external policy plugs in.

    Observations are discretized to (speed bucket, front-gap bucket); the table
    maps buckets to maneuver indices (missing entries use the default action).
    """

    __slots__ = ("table", "v_bin", "gap_bin", "default_action", "a_std")
    kind = "policy_stub"

    def __init__(self, table=None, v_bin=2.0, gap_bin=10.0, default_action=0, a_std=1.7):
        self.table = dict(table or {})
        self.v_bin = v_bin
        self.gap_bin = gap_bin
        self.default_action = default_action
        self.a_std = a_std

    def _lookup(self, world: World, aid: int) -> ManeuverAction:
        st = world.states[aid]
        front = world.front_agent(world.statics[aid].corridor, aid)
        gap = front[1] if front is not None else 1e9
        key = (int(st.v / self.v_bin), min(int(gap / self.gap_bin), 9))
        idx = self.table.get(key, self.default_action)
        return maneuver_set(self.a_std)[idx]

    def plan(self, dt: float, observed) -> Trajectory:
        world = observed.world
        aid = observed.observer_id
        action = self._lookup(world, aid)
        return ManeuverBehavior(action, world.statics[aid].corridor).plan(dt, observed)

# --- spec factories ---------------------------------------------------------------

def _idm_params_from(params: dict) -> IdmParams:
    base = IdmParams()
    return IdmParams(
        v0=float(params.get("v0", base.v0)),
        a_max=float(params.get("a_max", base.a_max)),
        tau=float(params.get("tau", base.tau)),
        b=float(params.get("b", base.b)),
        s0=float(params.get("s0", base.s0)),
        delta=float(params.get("delta", base.delta)),
    )

def _build_idm(spec: BehaviorSpec) -> IdmBehavior:
    return IdmBehavior(_idm_params_from(spec.params))

def _build_const_vel(spec: BehaviorSpec) -> ConstantVelocityBehavior:
    return ConstantVelocityBehavior()

def _build_mobil(spec: BehaviorSpec) -> MobilBehavior:
    idm = _idm_params_from(spec.params)
    return MobilBehavior(
        MobilParams(
            politeness=float(spec.params.get("politeness", 0.0)),
            a_threshold=float(spec.params.get("a_threshold", 0.1)),
            b_safe=float(spec.params.get("b_safe", 2.0 * idm.b)),
            idm=idm,
        )
    )

def _build_track(spec: BehaviorSpec) -> TrackBehavior:
    p = spec.params
    samples = list(zip(p["t"], p["x"], p["y"], p["theta"], p["v"]))
    record = TrackRecord.from_samples(
        int(p.get("track_id", 0)), samples, float(p.get("length", 4.6)), float(p.get("width", 1.8))
    )
    return TrackBehavior(record, float(p.get("offset", 0.0)))

def _build_policy_stub(spec: BehaviorSpec) -> PolicyStubBehavior:
    p = spec.params
    table = {}
    for name, value in p.items():
        if name.startswith("entry_"):
            _, iv, ig = name.split("_")
            table[(int(iv), int(ig))] = int(value)
    return PolicyStubBehavior(
        table,
        v_bin=float(p.get("v_bin", 2.0)),
        gap_bin=float(p.get("gap_bin", 10.0)),
        default_action=int(p.get("default_action", 0)),
        a_std=float(p.get("a_std", 1.7)),
    )

register_behavior_kind("idm", _build_idm)
register_behavior_kind("const_vel", _build_const_vel)
register_behavior_kind("mobil", _build_mobil)
register_behavior_kind("track", _build_track)
register_behavior_kind("policy_stub", _build_policy_stub)

# --- fused whole-step fast path -------------------------------------------------
#
# When every agent runs one of the built-in car-following models the stepping
# loops below advance the whole world without per-agent call overhead. The
# arithmetic replicates IdmBehavior._drive / ConstantVelocityBehavior exactly
# (same expressions in the same order); tests assert bit-equal results against
# the general observe/plan/execute route. Worlds where all lane followers share
# one straight constant-width corridor take an additional single-pass route.

def _classify_fused(world: World) -> object:
    corridor = None
    single = True
    for aid, b in world.behaviors.items():
        t = type(b)
        if t is IdmBehavior:
            c = world.statics[aid].corridor
            if corridor is None:
                corridor = c
            elif c is not corridor:
                single = False
        elif t is not ConstantVelocityBehavior:
            return False
    if (
        single
        and corridor is not None
        and corridor._single_seg is not None
        and corridor._const_hw is not None
    ):
        return corridor
    return "multi"

def _idm_endpoint(beh: "IdmBehavior", v, gap, v_lead, has_lead, durs):
    # Identical arithmetic to _idm_integrate with collect=False.
    p = beh.params
    two_sqrt_ab = beh._two_sqrt_ab
    inv_v0 = beh._inv_v0
    a_max = p.a_max
    tau = p.tau
    s0 = p.s0
    delta = p.delta
    pow4 = delta == 4.0
    ds = 0.0
    for h in durs:
        if pow4:
            u = v * inv_v0
            u *= u
            u *= u
        else:
            u = (v * inv_v0) ** delta
        if has_lead:
            if gap <= EMERGENCY_GAP:
                a = -10.0 * a_max
            else:
                s_star = v * tau + v * (v - v_lead) / two_sqrt_ab
                if s_star < 0.0:
                    s_star = 0.0
                s_star += s0
                ratio = s_star / gap
                a = a_max * (1.0 - u - ratio * ratio)
        else:
            a = a_max * (1.0 - u)
        v += a * h
        if v < 0.0:
            v = 0.0
        ds += v * h
        if has_lead:
            gap += (v_lead - v) * h
    return v, ds

def _fused_world_step(world: World, dt: float):
    kind = world._fused_kind
    if kind is None:
        kind = world._fused_kind = _classify_fused(world)
    if kind is False:
        return None
    behaviors = world.behaviors
    states = world.states
    statics = world.statics
    rels, durs = substep_schedule(dt)
    r_last = rels[-1]
    t0 = world.time
    t_last = t0 + r_last
    new_state = tuple.__new__
    new_states = {}

    if kind != "multi":
        # Single shared straight corridor: one projection pass, leaders are
        # sorted-order neighbors (ties in s skipped, as in the bisect route).
        corridor = kind
        ax, ay, ux, uy, seg_len = corridor._single_seg
        heading, wrapped = corridor._seg1_heading
        hw = corridor._const_hw
        length = corridor._length
        decay = math.exp(-r_last / T_LATERAL_KEEP)
        rows = []
        off_ids = []
        off_frames = {}
        for aid, st in states.items():
            rx = st.x - ax
            ry = st.y - ay
            s = rx * ux + ry * uy
            if s < 0.0:
                s = 0.0
            elif s > seg_len:
                s = seg_len
            d = -uy * rx + ux * ry
            if -hw < d < hw:
                rows.append((s, aid, d, statics[aid].half_length, st.v))
            else:
                off_ids.append(aid)
                off_frames[aid] = (s, d)
        rows.sort()
        n = len(rows)
        for j in range(n):
            s_ego, aid, d_ego, half_ego, v0 = rows[j]
            beh = behaviors[aid]
            st = states[aid]
            if type(beh) is ConstantVelocityBehavior:
                new_states[aid] = new_state(
                    AgentState,
                    (
                        st.t + dt,
                        st.x + v0 * math.cos(st.theta) * dt,
                        st.y + v0 * math.sin(st.theta) * dt,
                        st.theta,
                        v0,
                    ),
                )
                continue
            k = j + 1
            while k < n and rows[k][0] <= s_ego:
                k += 1
            if k < n:
                lead = rows[k]
                gap = (lead[0] - s_ego) - lead[3] - half_ego
                v, ds = _idm_endpoint(beh, v0, gap, lead[4], True, durs)
            else:
                v, ds = _idm_endpoint(beh, v0, 0.0, 0.0, False, durs)
            if d_ego == 0.0:
                s = s_ego + ds
                if s > length:
                    s = length
                new_states[aid] = new_state(
                    AgentState, (t_last, ax + ux * s, ay + uy * s, wrapped, v)
                )
            else:
                d = d_ego * decay
                ld = -d / T_LATERAL_KEEP
                s = s_ego + ds
                if s > length:
                    s = length
                theta = wrap_angle(heading + math.atan2(ld, v))
                new_states[aid] = new_state(
                    AgentState, (t_last, ax + ux * s - uy * d, ay + uy * s + ux * d, theta, v)
                )
        for aid in off_ids:
            beh = behaviors[aid]
            st = states[aid]
            if type(beh) is ConstantVelocityBehavior:
                v0 = st.v
                new_states[aid] = new_state(
                    AgentState,
                    (
                        st.t + dt,
                        st.x + v0 * math.cos(st.theta) * dt,
                        st.y + v0 * math.sin(st.theta) * dt,
                        st.theta,
                        v0,
                    ),
                )
                continue
            s_ego, d_ego = off_frames[aid]
            k = bisect_right(rows, (s_ego, 1 << 62))
            if k < n:
                lead = rows[k]
                gap = (lead[0] - s_ego) - lead[3] - statics[aid].half_length
                v, ds = _idm_endpoint(beh, st.v, gap, lead[4], True, durs)
            else:
                v, ds = _idm_endpoint(beh, st.v, 0.0, 0.0, False, durs)
            d = d_ego * decay
            ld = -d / T_LATERAL_KEEP
            s = s_ego + ds
            if s > length:
                s = length
            theta = wrap_angle(heading + math.atan2(ld, v))
            new_states[aid] = new_state(
                AgentState, (t_last, ax + ux * s - uy * d, ay + uy * s + ux * d, theta, v)
            )
        stepped = World(
            t0 + dt,
            world.step_index + 1,
            statics,
            new_states,
            behaviors,
            world.road_map,
            world.controlled_ids,
        )
        stepped._fused_kind = kind
        return stepped

    ordering = world.corridor_ordering
    fcache = world._fcache
    for aid, beh in behaviors.items():
        st = states[aid]
        if type(beh) is ConstantVelocityBehavior:
            v = st.v
            new_states[aid] = new_state(
                AgentState,
                (
                    st.t + dt,
                    st.x + v * math.cos(st.theta) * dt,
                    st.y + v * math.sin(st.theta) * dt,
                    st.theta,
                    v,
                ),
            )
            continue
        static = statics[aid]
        corridor = static.corridor
        entry = fcache.get(id(corridor))
        if entry is None:
            entry = ordering(corridor)
        frames, ordered = entry
        s_ego, d_ego = frames[aid]
        i = bisect_right(ordered, (s_ego, 1 << 62))
        if i < len(ordered):
            s_lead, lid = ordered[i]
            gap = (s_lead - s_ego) - statics[lid].half_length - static.half_length
            v_lead = states[lid].v
            has_lead = True
        else:
            gap = v_lead = 0.0
            has_lead = False
        v, ds = _idm_endpoint(beh, st.v, gap, v_lead, has_lead, durs)
        # Inlined _lat_keep + _frenet_state (endpoint only).
        if d_ego == 0.0:
            d = 0.0
            ld = 0.0
        else:
            d = d_ego * math.exp(-r_last / T_LATERAL_KEEP)
            ld = -d / T_LATERAL_KEEP
        s = s_ego + ds
        length = corridor._length
        if s > length:
            s = length
        seg = corridor._single_seg
        if seg is not None:
            ax, ay, ux, uy, _L = seg
            x = ax + ux * s - uy * d
            y = ay + uy * s + ux * d
            heading, wrapped = corridor._seg1_heading
            theta = wrapped if ld == 0.0 else wrap_angle(heading + math.atan2(ld, v))
            new_states[aid] = new_state(AgentState, (t_last, x, y, theta, v))
        else:
            pnt, heading = point_at_arclength(corridor.center, s, d)
            theta = wrap_angle(heading) if ld == 0.0 else wrap_angle(heading + math.atan2(ld, v))
            new_states[aid] = new_state(AgentState, (t_last, pnt.x, pnt.y, theta, v))
    stepped = World(
        t0 + dt,
        world.step_index + 1,
        statics,
        new_states,
        behaviors,
        world.road_map,
        world.controlled_ids,
    )
    stepped._fused_kind = kind
    return stepped


from . import world as _world_module

_world_module._fused_step_hook = _fused_world_step
