"""Scenario definition, sampling-based generation and binary database storage.

Scenarios are fully serialized initial conditions: agents (state, shape dims,
behavior spec, goal, start lane), the controlled agent, the step size and
horizon, plus the map by name and content hash. Databases embed map contents,
so a saved DB is self-contained and bit-reproducible across machines: all
randomness comes from the fixed counter-based generator in ``rng``, and the
binary encoding is canonical (two saves of an equal DB are byte-identical).
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .geometry import (
    GeometryError,
    Polygon,
    point_at_arclength,
    polygon_collide,
    polygon_transform,
    project_to_polyline,
)
from .rng import Stream, derive
from .roadmap import (
    GoalDefinition,
    GoalRegion,
    LaneGoal,
    NoRouteError,
    RoadCorridor,
    RoadMap,
    compute_road_corridor,
    parse_map,
)
from .specs import BehaviorSpec, PredictionConfig, build_behavior
from .world import AgentInit, AgentState, World
from .behaviors import TrackRecord

DB_MAGIC = b"BBDB"
DB_VERSION = 1
PLACEMENT_RETRIES = 100


class GenerationError(RuntimeError):
    pass


class DbFormatError(ValueError):
    pass


class DbVersionError(DbFormatError):
    pass


@dataclass(frozen=True)
class ScenarioAgent:
    id: int
    state: tuple[float, float, float, float, float]  # (t, x, y, theta, v)
    length: float
    width: float
    behavior: BehaviorSpec
    goal: GoalDefinition
    start_lane: int


@dataclass(frozen=True)
class Scenario:
    map_name: str
    map_hash: str
    dt: float
    horizon: int
    controlled_id: int
    seed: int
    agents: tuple[ScenarioAgent, ...]

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))


@dataclass(frozen=True)
class SourceSinkConfig:
    """One scenario-generation entry: where agents enter and how they are drawn."""

    source_lane: int
    sink_lane: int
    distance_range: tuple[float, float]  # inter-agent longitudinal gaps [m]
    velocity_range: tuple[float, float]  # [m/s]
    count_range: tuple[int, int]
    behavior: BehaviorSpec
    goal: Mapping
    controlled: bool = False
    length: float = 4.6
    width: float = 1.8
    start_offset: float = 0.0  # arc length where this entry's placement cursor starts

    def __post_init__(self):
        for name in ("distance_range", "velocity_range", "count_range"):
            lo, hi = getattr(self, name)
            if hi < lo:
                raise ValueError(f"{name} is empty: {lo}..{hi}")


@dataclass
class ScenarioDatabase:
    version: int
    seed: int
    provenance: str
    maps: dict[str, str]  # name -> map file content
    sets: dict[str, list[Scenario]]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ScenarioDatabase)
            and self.version == other.version
            and self.seed == other.seed
            and self.provenance == other.provenance
            and self.maps == other.maps
            and self.sets == other.sets
        )


def map_content_hash(content: str) -> str:
    return hashlib.sha256(content.encode("utf-8")).hexdigest()


# --- goal templates ------------------------------------------------------------


def _resolve_goal(template: Mapping, road_map: RoadMap, corridor: RoadCorridor, s_agent: float) -> GoalDefinition:
    kind = template["kind"]
    if kind == "lane":
        return LaneGoal(int(template["lane"]), float(template.get("min_arclength", 0.0)))
    if kind == "lane_end":
        lane = road_map.lanes[int(template.get("lane", corridor.lane_ids[-1]))]
        frac = float(template.get("fraction", 0.9))
        return LaneGoal(lane.id, lane.center.length * frac)
    if kind == "region":
        return GoalRegion(Polygon([tuple(p) for p in template["vertices"]]))
    if kind == "region_ahead":
        # A lane-width box on `lane`, `ahead` meters in front of the sampled agent.
        lane = road_map.lanes[int(template["lane"])]
        ahead = float(template["ahead"])
        length = float(template.get("length", 10.0))
        s_mid = min(s_agent + ahead, lane.center.length - length / 2.0)
        lo, _ = point_at_arclength(lane.center, max(s_mid - length / 2.0, 0.0))
        hi, heading = point_at_arclength(lane.center, min(s_mid + length / 2.0, lane.center.length))
        nx, ny = -math.sin(heading), math.cos(heading)
        i = min(
            range(len(lane.half_widths)),
            key=lambda k: abs(lane.center.cumlength[k] - s_mid),
        )
        hw = lane.half_widths[i]
        return GoalRegion(
            Polygon(
                [
                    (lo.x - nx * hw, lo.y - ny * hw),
                    (hi.x - nx * hw, hi.y - ny * hw),
                    (hi.x + nx * hw, hi.y + ny * hw),
                    (lo.x + nx * hw, lo.y + ny * hw),
                ]
            )
        )
    raise ValueError(f"unknown goal template kind {kind!r}")


# --- generation ------------------------------------------------------------------


def _rect(length: float, width: float) -> Polygon:
    hl, hw = length / 2.0, width / 2.0
    return Polygon([(-hl, -hw), (hl, -hw), (hl, hw), (-hl, hw)])


def _poses_collide(a, b) -> bool:
    # a, b: (x, y, theta, length, width)
    pa = polygon_transform(_rect(a[3], a[4]), (a[0], a[1], a[2]))
    pb = polygon_transform(_rect(b[3], b[4]), (b[0], b[1], b[2]))
    return polygon_collide(pa, pb)


def generate_scenarios(
    cfgs: Sequence[SourceSinkConfig],
    n: int,
    seed: int,
    road_map: RoadMap,
    map_name: str,
    map_content: str,
    dt: float = 0.2,
    horizon: int = 30,
) -> list[Scenario]:
    """Sample ``n`` scenarios; fully determined by (cfgs, n, seed).

    Agents are placed sequentially along each entry's routed corridor with
    gaps and speeds drawn uniformly from the configured ranges; placements
    that collide with already-placed agents are resampled a bounded number
    of times.
    """
    controlled_entries = [i for i, c in enumerate(cfgs) if c.controlled]
    if len(controlled_entries) != 1:
        raise GenerationError("exactly one source-sink entry must be controlled")
    map_hash = map_content_hash(map_content)
    corridors = {}
    for cfg in cfgs:
        key = (cfg.source_lane, cfg.sink_lane)
        if key not in corridors:
            if cfg.source_lane not in road_map.lanes or cfg.sink_lane not in road_map.lanes:
                raise GenerationError(f"unknown lane in source-sink pair {key}")
            try:
                corridors[key] = compute_road_corridor(
                    road_map, cfg.source_lane, LaneGoal(cfg.sink_lane, 0.0)
                )
            except NoRouteError as exc:
                raise GenerationError(str(exc)) from exc
    scenarios = []
    for index in range(n):
        scenario_seed = derive(seed, index)
        stream = Stream(scenario_seed)
        agents: list[ScenarioAgent] = []
        placed: list[tuple[float, float, float, float, float]] = []
        controlled_id = None
        next_id = 0
        for cfg in cfgs:
            corridor = corridors[(cfg.source_lane, cfg.sink_lane)]
            count = stream.randint(cfg.count_range[0], cfg.count_range[1])
            cursor = cfg.start_offset
            for _ in range(count):
                pose = None
                for _attempt in range(PLACEMENT_RETRIES):
                    gap = stream.uniform(cfg.distance_range[0], cfg.distance_range[1])
                    s = cursor + gap
                    if s > corridor.center.length:
                        raise GenerationError(
                            f"entry {cfg.source_lane}->{cfg.sink_lane}: lane too short for requested agents"
                        )
                    point, heading = point_at_arclength(corridor.center, s)
                    candidate = (point.x, point.y, heading, cfg.length, cfg.width)
                    if not any(_poses_collide(candidate, other) for other in placed):
                        pose = (s, candidate)
                        break
                if pose is None:
                    raise GenerationError("could not place agent without collision")
                s, candidate = pose
                cursor = s
                v = stream.uniform(cfg.velocity_range[0], cfg.velocity_range[1])
                placed.append(candidate)
                behavior = cfg.behavior
                if behavior.kind in ("mcts_single", "mcts_multi") and "rng_seed" not in behavior.params:
                    # Mask to 63 bits: parameter values are stored as signed 64-bit.
                    behavior = behavior.with_params(
                        rng_seed=derive(scenario_seed, next_id) & 0x7FFFFFFFFFFFFFFF
                    )
                goal = _resolve_goal(cfg.goal, road_map, corridor, s)
                agents.append(
                    ScenarioAgent(
                        next_id,
                        (0.0, candidate[0], candidate[1], candidate[2], v),
                        cfg.length,
                        cfg.width,
                        behavior,
                        goal,
                        cfg.source_lane,
                    )
                )
                if cfg.controlled:
                    controlled_id = next_id
                next_id += 1
        scenarios.append(
            Scenario(map_name, map_hash, dt, horizon, controlled_id, scenario_seed, tuple(agents))
        )
    return scenarios


# --- scenarios from recorded tracks ----------------------------------------------


def scenario_from_tracks(
    tracks: Sequence[TrackRecord],
    start_time: float,
    replaced: Mapping[int, BehaviorSpec],
    controlled_id: int,
    road_map: RoadMap,
    map_name: str,
    map_content: str,
    dt: float = 0.1,
    horizon: int = 300,
    goals: Optional[Mapping[int, GoalDefinition]] = None,
    seed: int = 0,
) -> Scenario:
    """Replay scenario: non-replaced agents track their recordings, replaced
    agents run the given behavior specs from the recorded state at ``start_time``."""
    by_id = {rec.track_id: rec for rec in tracks}
    for rid in replaced:
        if rid not in by_id:
            raise KeyError(f"unknown track id {rid}")
    if controlled_id not in by_id:
        raise KeyError(f"unknown track id {controlled_id}")
    goals = dict(goals or {})
    agents = []
    for rec in tracks:
        if start_time < rec.t[0] - 1e-9 or start_time > rec.t[-1]:
            raise ValueError(
                f"track {rec.track_id}: start time {start_time} outside [{rec.t[0]}, {rec.t[-1]}]"
            )
        st = rec.state_at(start_time)
        state = (0.0, st.x, st.y, st.theta, st.v)
        start_lane = nearest_lane(road_map, st.x, st.y)
        goal = goals.get(rec.track_id)
        if goal is None:
            end_lane = nearest_lane(road_map, rec.x[-1], rec.y[-1])
            fc = project_to_polyline(road_map.lanes[end_lane].center, (rec.x[-1], rec.y[-1]))
            goal = LaneGoal(end_lane, max(fc.s - 1.0, 0.0))
        if rec.track_id in replaced:
            behavior = replaced[rec.track_id]
        else:
            behavior = BehaviorSpec(
                "track",
                {
                    "track_id": rec.track_id,
                    "t": rec.t,
                    "x": rec.x,
                    "y": rec.y,
                    "theta": rec.theta,
                    "v": rec.v,
                    "length": rec.length,
                    "width": rec.width,
                    "offset": start_time,
                },
            )
        agents.append(
            ScenarioAgent(rec.track_id, state, rec.length, rec.width, behavior, goal, start_lane)
        )
    agents.sort(key=lambda a: a.id)
    return Scenario(
        map_name,
        map_content_hash(map_content),
        dt,
        horizon,
        controlled_id,
        seed,
        tuple(agents),
    )


def nearest_lane(road_map: RoadMap, x: float, y: float) -> int:
    best = None
    for lane in road_map.lanes.values():
        fc = project_to_polyline(lane.center, (x, y))
        p, _ = point_at_arclength(lane.center, min(max(fc.s, 0.0), lane.center.length))
        dist = math.hypot(x - p.x, y - p.y)
        if best is None or dist < best[0]:
            best = (dist, lane.id)
    return best[1]


# --- world materialization --------------------------------------------------------


def build_world(scenario: Scenario, road_map: RoadMap, behavior_override: Optional[BehaviorSpec] = None) -> World:
    """Construct the initial World for a scenario.

    ``behavior_override`` replaces the controlled agent's behavior spec (the
    benchmark runner uses this to vary planner configurations over one DB).
    """
    corridor_cache: dict = {}
    inits = []
    for agent in scenario.agents:
        goal = agent.goal
        key = (agent.start_lane, goal)
        corridor = corridor_cache.get(key)
        if corridor is None:
            corridor = compute_road_corridor(road_map, agent.start_lane, goal)
            corridor_cache[key] = corridor
        spec = agent.behavior
        if behavior_override is not None and agent.id == scenario.controlled_id:
            spec = behavior_override
            if spec.kind in ("mcts_single", "mcts_multi") and "rng_seed" not in spec.params:
                spec = spec.with_params(rng_seed=scenario.seed & 0x7FFFFFFFFFFFFFFF)
        t, x, y, theta, v = agent.state
        inits.append(
            AgentInit(
                agent.id,
                AgentState(t, x, y, theta, v),
                _rect(agent.length, agent.width),
                build_behavior(spec),
                goal,
                corridor,
                prediction=spec.prediction,
            )
        )
    return World.build(0.0, inits, road_map, (scenario.controlled_id,))


# --- canonical binary encoding -----------------------------------------------------


class _Writer:
    def __init__(self):
        self.parts: list[bytes] = []

    def u8(self, v):
        self.parts.append(struct.pack("<B", v))

    def u16(self, v):
        self.parts.append(struct.pack("<H", v))

    def u32(self, v):
        self.parts.append(struct.pack("<I", v))

    def u64(self, v):
        self.parts.append(struct.pack("<Q", v))

    def i64(self, v):
        self.parts.append(struct.pack("<q", v))

    def f64(self, v):
        self.parts.append(struct.pack("<d", v))

    def text(self, s: str):
        raw = s.encode("utf-8")
        self.u32(len(raw))
        self.parts.append(raw)

    def getvalue(self) -> bytes:
        return b"".join(self.parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def _take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise DbFormatError("truncated stream")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self):
        return struct.unpack("<B", self._take(1))[0]

    def u16(self):
        return struct.unpack("<H", self._take(2))[0]

    def u32(self):
        return struct.unpack("<I", self._take(4))[0]

    def u64(self):
        return struct.unpack("<Q", self._take(8))[0]

    def i64(self):
        return struct.unpack("<q", self._take(8))[0]

    def f64(self):
        return struct.unpack("<d", self._take(8))[0]

    def text(self) -> str:
        n = self.u32()
        return self._take(n).decode("utf-8")


_VAL_F64, _VAL_I64, _VAL_STR, _VAL_BOOL, _VAL_F64S = range(5)


def _write_value(w: _Writer, v):
    if isinstance(v, bool):
        w.u8(_VAL_BOOL)
        w.u8(1 if v else 0)
    elif isinstance(v, int):
        if not -(1 << 63) <= v < (1 << 63):
            raise DbFormatError(f"integer parameter out of signed 64-bit range: {v}")
        w.u8(_VAL_I64)
        w.i64(v)
    elif isinstance(v, float):
        w.u8(_VAL_F64)
        w.f64(v)
    elif isinstance(v, str):
        w.u8(_VAL_STR)
        w.text(v)
    elif isinstance(v, (tuple, list)):
        w.u8(_VAL_F64S)
        w.u32(len(v))
        for x in v:
            w.f64(float(x))
    else:
        raise DbFormatError(f"unsupported parameter value type {type(v).__name__}")


def _read_value(r: _Reader):
    tag = r.u8()
    if tag == _VAL_BOOL:
        return r.u8() == 1
    if tag == _VAL_I64:
        return r.i64()
    if tag == _VAL_F64:
        return r.f64()
    if tag == _VAL_STR:
        return r.text()
    if tag == _VAL_F64S:
        return tuple(r.f64() for _ in range(r.u32()))
    raise DbFormatError(f"unknown value tag {tag}")


def _write_spec(w: _Writer, spec: BehaviorSpec):
    w.text(spec.kind)
    w.u32(len(spec.params))
    for name in sorted(spec.params):
        w.text(name)
        _write_value(w, spec.params[name])
    if spec.prediction is None:
        w.u8(0)
    else:
        w.u8(1)
        _write_prediction(w, spec.prediction)


def _read_spec(r: _Reader) -> BehaviorSpec:
    kind = r.text()
    params = {}
    for _ in range(r.u32()):
        name = r.text()
        params[name] = _read_value(r)
    prediction = _read_prediction(r) if r.u8() == 1 else None
    return BehaviorSpec(kind, params, prediction)


def _write_prediction(w: _Writer, cfg: PredictionConfig):
    _write_spec(w, cfg.default_model)
    w.u32(len(cfg.overrides))
    for aid in sorted(cfg.overrides):
        w.i64(aid)
        _write_spec(w, cfg.overrides[aid])
    w.u32(len(cfg.parameter_perturbation))
    for name in sorted(cfg.parameter_perturbation):
        w.text(name)
        w.f64(cfg.parameter_perturbation[name])


def _read_prediction(r: _Reader) -> PredictionConfig:
    default = _read_spec(r)
    overrides = {}
    for _ in range(r.u32()):
        aid = r.i64()
        overrides[aid] = _read_spec(r)
    perturb = {}
    for _ in range(r.u32()):
        name = r.text()
        perturb[name] = r.f64()
    return PredictionConfig(default, overrides, perturb)


_GOAL_REGION, _GOAL_LANE = 0, 1


def _write_goal(w: _Writer, goal: GoalDefinition):
    if isinstance(goal, GoalRegion):
        w.u8(_GOAL_REGION)
        verts = goal.polygon.vertices
        w.u32(len(verts))
        for p in verts:
            w.f64(p.x)
            w.f64(p.y)
    elif isinstance(goal, LaneGoal):
        w.u8(_GOAL_LANE)
        w.i64(goal.lane_id)
        w.f64(goal.min_arclength)
    else:
        raise DbFormatError(f"unsupported goal kind {type(goal).__name__}")


def _read_goal(r: _Reader) -> GoalDefinition:
    tag = r.u8()
    if tag == _GOAL_REGION:
        n = r.u32()
        verts = [(r.f64(), r.f64()) for _ in range(n)]
        try:
            return GoalRegion(Polygon(verts))
        except GeometryError as exc:
            raise DbFormatError(f"invalid goal polygon: {exc}") from exc
    if tag == _GOAL_LANE:
        return LaneGoal(r.i64(), r.f64())
    raise DbFormatError(f"unknown goal tag {tag}")


def _write_scenario(w: _Writer, sc: Scenario):
    w.text(sc.map_name)
    w.text(sc.map_hash)
    w.f64(sc.dt)
    w.u32(sc.horizon)
    w.i64(sc.controlled_id)
    w.u64(sc.seed)
    w.u32(len(sc.agents))
    for a in sc.agents:
        w.i64(a.id)
        for comp in a.state:
            w.f64(comp)
        w.f64(a.length)
        w.f64(a.width)
        _write_spec(w, a.behavior)
        _write_goal(w, a.goal)
        w.i64(a.start_lane)


def _read_scenario(r: _Reader) -> Scenario:
    map_name = r.text()
    map_hash = r.text()
    dt = r.f64()
    horizon = r.u32()
    controlled_id = r.i64()
    seed = r.u64()
    agents = []
    for _ in range(r.u32()):
        aid = r.i64()
        state = tuple(r.f64() for _ in range(5))
        length = r.f64()
        width = r.f64()
        behavior = _read_spec(r)
        goal = _read_goal(r)
        start_lane = r.i64()
        agents.append(ScenarioAgent(aid, state, length, width, behavior, goal, start_lane))
    return Scenario(map_name, map_hash, dt, horizon, controlled_id, seed, tuple(agents))


def db_save(db: ScenarioDatabase) -> bytes:
    """Canonical binary form: equal databases serialize to identical bytes."""
    w = _Writer()
    w.parts.append(DB_MAGIC)
    w.u16(db.version)
    w.u64(db.seed)
    w.text(db.provenance)
    w.u32(len(db.maps))
    for name in sorted(db.maps):
        w.text(name)
        w.text(db.maps[name])
    w.u32(len(db.sets))
    for name in sorted(db.sets):
        w.text(name)
        scenarios = db.sets[name]
        w.u32(len(scenarios))
        for sc in scenarios:
            _write_scenario(w, sc)
    return w.getvalue()


def db_load(data: bytes) -> ScenarioDatabase:
    r = _Reader(data)
    if r._take(4) != DB_MAGIC:
        raise DbFormatError("not a scenario database (bad magic)")
    version = r.u16()
    if version != DB_VERSION:
        raise DbVersionError(f"unsupported database version {version}")
    seed = r.u64()
    provenance = r.text()
    maps = {}
    for _ in range(r.u32()):
        name = r.text()
        maps[name] = r.text()
    sets = {}
    for _ in range(r.u32()):
        name = r.text()
        scenarios = [_read_scenario(r) for _ in range(r.u32())]
        sets[name] = scenarios
    if r.pos != len(r.data):
        raise DbFormatError("trailing bytes after database payload")
    db = ScenarioDatabase(version, seed, provenance, maps, sets)
    for set_name, scenarios in sets.items():
        for i, sc in enumerate(scenarios):
            content = maps.get(sc.map_name)
            if content is None:
                raise DbFormatError(f"{set_name}[{i}]: map {sc.map_name!r} not embedded")
            if map_content_hash(content) != sc.map_hash:
                raise DbFormatError(f"{set_name}[{i}]: map content hash mismatch")
    return db


def load_road_map(db: ScenarioDatabase, scenario: Scenario, _cache: dict = {}) -> RoadMap:
    key = scenario.map_hash
    cached = _cache.get(key)
    if cached is None:
        cached = parse_map(db.maps[scenario.map_name], scenario.map_name)
        _cache[key] = cached
    return cached


# --- JSON configuration -------------------------------------------------------------


def spec_from_json(obj: Mapping) -> BehaviorSpec:
    params = dict(obj.get("params", {}))
    for key, value in list(params.items()):
        if isinstance(value, list):
            params[key] = tuple(value)
    prediction = obj.get("prediction")
    return BehaviorSpec(
        obj["kind"],
        params,
        prediction_from_json(prediction) if prediction else None,
    )


def prediction_from_json(obj: Mapping) -> PredictionConfig:
    overrides = {int(k): spec_from_json(v) for k, v in obj.get("overrides", {}).items()}
    return PredictionConfig(
        spec_from_json(obj["default"]),
        overrides,
        {k: float(v) for k, v in obj.get("perturb", {}).items()},
    )


def _velocity_range(entry: Mapping) -> tuple[float, float]:
    if "speed_range_kmh" in entry:
        lo, hi = entry["speed_range_kmh"]
        return (lo / 3.6, hi / 3.6)  # km/h -> m/s
    lo, hi = entry["speed_range"]
    return (float(lo), float(hi))


def entry_from_json(obj: Mapping) -> SourceSinkConfig:
    count = obj.get("count", [1, 1])
    return SourceSinkConfig(
        source_lane=int(obj["source"]),
        sink_lane=int(obj.get("sink", obj["source"])),
        distance_range=tuple(float(x) for x in obj["gap_range"]),
        velocity_range=_velocity_range(obj),
        count_range=(int(count[0]), int(count[1])),
        behavior=spec_from_json(obj["behavior"]),
        goal=obj["goal"],
        controlled=bool(obj.get("controlled", False)),
        length=float(obj.get("length", 4.6)),
        width=float(obj.get("width", 1.8)),
        start_offset=float(obj.get("start_offset", 0.0)),
    )


def generate_database(config: Mapping, map_content: str, seed: Optional[int] = None) -> ScenarioDatabase:
    """Build a ScenarioDatabase from a generator configuration (parsed JSON)."""
    road_map = parse_map(map_content, config["map"])
    master_seed = int(config.get("seed", 0) if seed is None else seed)
    dt = float(config.get("dt", 0.2))
    horizon = int(config.get("horizon", 30))
    sets = {}
    for set_index, set_cfg in enumerate(config["sets"]):
        entries = [entry_from_json(e) for e in set_cfg["entries"]]
        set_seed = derive(master_seed, set_index)
        if "placement_seed_of" in set_cfg:
            # Share placements with another set (index); only specs differ.
            set_seed = derive(master_seed, int(set_cfg["placement_seed_of"]))
        sets[set_cfg["name"]] = generate_scenarios(
            entries,
            int(set_cfg["count"]),
            set_seed,
            road_map,
            config["map"],
            map_content,
            dt=float(set_cfg.get("dt", dt)),
            horizon=int(set_cfg.get("horizon", horizon)),
        )
    provenance = json.dumps(
        {"config": config, "seed": master_seed}, sort_keys=True, separators=(",", ":")
    )
    return ScenarioDatabase(DB_VERSION, master_seed, provenance, {config["map"]: map_content}, sets)
