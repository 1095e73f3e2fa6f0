"""Benchmark runner: every scenario under every named configuration.

Termination is evaluator-driven with fixed precedence (collision before
off-drivable-area before goal before max-steps) so safety outcomes are never
masked by simultaneous goal attainment. Runs are independent, records are
buffered and sorted, so results are invariant to the worker count
(bit-identical apart from wall time).
"""

from __future__ import annotations

import io
import logging
import time
from dataclasses import dataclass
from multiprocessing import get_context
from typing import Mapping, Optional, Sequence

from .evaluators import (
    COLLISION_CONTROLLED,
    eval_collision,
    eval_drivable_area,
    eval_goal_distance,
    eval_goal_reached,
)
from .scenario import Scenario, ScenarioDatabase, build_world, load_road_map, spec_from_json
from .specs import BehaviorSpec
from .world import BehaviorContractError, world_step

REASON_COLLISION = "Collision"
REASON_OFF_DRIVABLE = "OffDrivableArea"
REASON_GOAL = "GoalReached"
REASON_MAX_STEPS = "MaxSteps"
REASON_ERROR = "Error"

CRITERION_COLLISION = "collision"
CRITERION_DRIVABLE = "drivable_area"
CRITERION_GOAL = "goal_reached"
CRITERION_MAX_STEPS = "max_steps"

RESULT_COLUMNS = (
    "scenario_set",
    "scenario_index",
    "config_name",
    "seed",
    "terminal_reason",
    "steps",
    "collision",
    "goal_reached",
    "goal_distance",
    "wall_time_s",
)


@dataclass(frozen=True)
class BenchmarkConfig:
    name: str
    controlled_behavior: Optional[BehaviorSpec] = None  # None: scenario's own spec
    criteria: tuple[str, ...] = (CRITERION_COLLISION, CRITERION_GOAL, CRITERION_MAX_STEPS)
    max_steps: Optional[int] = None  # None: scenario horizon
    dt: Optional[float] = None  # None: scenario dt
    collision_scope: str = COLLISION_CONTROLLED

    def __post_init__(self):
        if not self.criteria:
            raise ValueError("criteria must be non-empty")
        known = {CRITERION_COLLISION, CRITERION_DRIVABLE, CRITERION_GOAL, CRITERION_MAX_STEPS}
        unknown = set(self.criteria) - known
        if unknown:
            raise ValueError(f"unknown criteria {sorted(unknown)}")


@dataclass(frozen=True)
class BenchmarkRecord:
    scenario_set: str
    scenario_index: int
    config_name: str
    seed: int
    terminal_reason: str
    steps: int
    collision: bool
    goal_reached: bool
    goal_distance: float
    wall_time_s: float

    def sort_key(self):
        return (self.scenario_set, self.scenario_index, self.config_name)


def run_scenario(
    scenario: Scenario,
    cfg: BenchmarkConfig,
    road_map,
    scenario_set: str = "",
    scenario_index: int = 0,
) -> BenchmarkRecord:
    """Step one scenario to termination and report the evaluator readings."""
    start = time.perf_counter()
    dt = cfg.dt if cfg.dt is not None else scenario.dt
    max_steps = cfg.max_steps if cfg.max_steps is not None else scenario.horizon
    controlled = scenario.controlled_id
    reason = REASON_MAX_STEPS
    steps = 0
    try:
        world = build_world(scenario, road_map, cfg.controlled_behavior)
        while steps < max_steps:
            world = world_step(world, dt)
            steps = world.step_index
            # Fixed precedence: collision > off-drivable > goal > max-steps.
            if CRITERION_COLLISION in cfg.criteria and eval_collision(world, cfg.collision_scope):
                reason = REASON_COLLISION
                break
            if CRITERION_DRIVABLE in cfg.criteria and not eval_drivable_area(world, controlled):
                reason = REASON_OFF_DRIVABLE
                break
            if CRITERION_GOAL in cfg.criteria and eval_goal_reached(world, controlled):
                reason = REASON_GOAL
                break
        collision = eval_collision(world, cfg.collision_scope)
        goal = eval_goal_reached(world, controlled)
        distance = eval_goal_distance(world, controlled)
    except BehaviorContractError as exc:
        logging.getLogger("bbsim.benchmark").warning(
            "%s[%d] %s: behavior contract violation: %s", scenario_set, scenario_index, cfg.name, exc
        )
        return BenchmarkRecord(
            scenario_set,
            scenario_index,
            cfg.name,
            scenario.seed,
            REASON_ERROR,
            steps,
            False,
            False,
            float("nan"),
            time.perf_counter() - start,
        )
    return BenchmarkRecord(
        scenario_set,
        scenario_index,
        cfg.name,
        scenario.seed,
        reason,
        steps,
        collision,
        goal,
        distance,
        time.perf_counter() - start,
    )


_WORKER_DB: Optional[ScenarioDatabase] = None
_WORKER_CFGS: Optional[dict] = None


def _worker_init(db_bytes: bytes, cfgs):
    global _WORKER_DB, _WORKER_CFGS
    from .scenario import db_load

    _WORKER_DB = db_load(db_bytes)
    _WORKER_CFGS = {c.name: c for c in cfgs}


def _worker_run(task):
    set_name, index, cfg_name = task
    scenario = _WORKER_DB.sets[set_name][index]
    road_map = load_road_map(_WORKER_DB, scenario)
    return run_scenario(scenario, _WORKER_CFGS[cfg_name], road_map, set_name, index)


def run_benchmark(
    db: ScenarioDatabase,
    cfgs: Sequence[BenchmarkConfig],
    workers: int = 1,
    progress=None,
) -> list[BenchmarkRecord]:
    """Cartesian product (scenario x config), optionally on a process pool.

    Output is sorted by (scenario_set, scenario_index, config_name) and is
    invariant to ``workers`` apart from wall times.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    tasks = [
        (set_name, index, cfg.name)
        for set_name in sorted(db.sets)
        for index in range(len(db.sets[set_name]))
        for cfg in cfgs
    ]
    records: list[BenchmarkRecord] = []
    if workers == 1:
        cfg_by_name = {c.name: c for c in cfgs}
        for set_name, index, cfg_name in tasks:
            scenario = db.sets[set_name][index]
            road_map = load_road_map(db, scenario)
            records.append(run_scenario(scenario, cfg_by_name[cfg_name], road_map, set_name, index))
            if progress is not None:
                progress(len(records), len(tasks))
    else:
        from .scenario import db_save

        ctx = get_context("fork")
        with ctx.Pool(workers, initializer=_worker_init, initargs=(db_save(db), list(cfgs))) as pool:
            for rec in pool.imap_unordered(_worker_run, tasks, chunksize=1):
                records.append(rec)
                if progress is not None:
                    progress(len(records), len(tasks))
    records.sort(key=BenchmarkRecord.sort_key)
    return records


def records_to_csv(records: Sequence[BenchmarkRecord]) -> str:
    """Results CSV: floats at 9 significant digits, LF line endings."""
    out = io.StringIO()
    out.write(",".join(RESULT_COLUMNS) + "\n")
    for r in records:
        out.write(
            f"{r.scenario_set},{r.scenario_index},{r.config_name},{r.seed},"
            f"{r.terminal_reason},{r.steps},{str(r.collision).lower()},"
            f"{str(r.goal_reached).lower()},{r.goal_distance:.9g},{r.wall_time_s:.9g}\n"
        )
    return out.getvalue()


@dataclass(frozen=True)
class SummaryRow:
    scenario_set: str
    config_name: str
    runs: int
    success_rate: float  # percent
    collision_rate: float
    max_steps_rate: float
    mean_steps_to_goal: Optional[float]


def summarize(records: Sequence[BenchmarkRecord]) -> list[SummaryRow]:
    """Outcome percentages per (scenario set, config); mean steps over goal runs."""
    if not records:
        raise ValueError("no records to summarize")
    groups: dict[tuple[str, str], list[BenchmarkRecord]] = {}
    for r in records:
        groups.setdefault((r.scenario_set, r.config_name), []).append(r)
    rows = []
    for (set_name, cfg_name) in sorted(groups):
        group = groups[(set_name, cfg_name)]
        n = len(group)
        goals = [r for r in group if r.terminal_reason == REASON_GOAL]
        collisions = sum(1 for r in group if r.terminal_reason == REASON_COLLISION)
        max_steps = sum(1 for r in group if r.terminal_reason == REASON_MAX_STEPS)
        mean_steps = sum(r.steps for r in goals) / len(goals) if goals else None
        rows.append(
            SummaryRow(
                set_name,
                cfg_name,
                n,
                100.0 * len(goals) / n,
                100.0 * collisions / n,
                100.0 * max_steps / n,
                mean_steps,
            )
        )
    return rows


def format_summary(rows: Sequence[SummaryRow]) -> str:
    header = f"{'set':<16} {'config':<20} {'runs':>5} {'success%':>9} {'collision%':>11} {'max_steps%':>11} {'steps_to_goal':>14}"
    lines = [header, "-" * len(header)]
    for row in rows:
        steps = f"{row.mean_steps_to_goal:.2f}" if row.mean_steps_to_goal is not None else "-"
        lines.append(
            f"{row.scenario_set:<16} {row.config_name:<20} {row.runs:>5} "
            f"{row.success_rate:>9.1f} {row.collision_rate:>11.1f} {row.max_steps_rate:>11.1f} {steps:>14}"
        )
    return "\n".join(lines)


def configs_from_json(obj: Mapping) -> list[BenchmarkConfig]:
    configs = []
    for c in obj["configs"]:
        controlled = c.get("controlled_behavior")
        configs.append(
            BenchmarkConfig(
                name=c["name"],
                controlled_behavior=spec_from_json(controlled) if controlled else None,
                criteria=tuple(c.get("criteria", (CRITERION_COLLISION, CRITERION_GOAL, CRITERION_MAX_STEPS))),
                max_steps=int(c["max_steps"]) if "max_steps" in c else None,
                dt=float(c["dt"]) if "dt" in c else None,
                collision_scope=c.get("collision_scope", COLLISION_CONTROLLED),
            )
        )
    if not configs:
        raise ValueError("benchmark config defines no configs")
    names = [c.name for c in configs]
    if len(set(names)) != len(names):
        raise ValueError("duplicate config names")
    return configs


def parse_results_csv(text: str) -> list[BenchmarkRecord]:
    import csv as _csv

    rows = list(_csv.reader(io.StringIO(text)))
    if not rows:
        raise ValueError("empty results CSV")
    header = tuple(rows[0])
    if header != RESULT_COLUMNS:
        missing = set(RESULT_COLUMNS) - set(header)
        raise ValueError(f"results CSV missing columns: {sorted(missing)}" if missing else f"bad header {header}")
    records = []
    for row in rows[1:]:
        if not row:
            continue
        records.append(
            BenchmarkRecord(
                row[0],
                int(row[1]),
                row[2],
                int(row[3]),
                row[4],
                int(row[5]),
                row[6] == "true",
                row[7] == "true",
                float(row[8]),
                float(row[9]),
            )
        )
    return records
