"""Command-line entry point.

Subcommands: ``gen-db`` (sample a scenario database), ``run`` (benchmark a
database), ``replay`` (step one scenario, writing SVG frames) and ``chart``
(bar chart from a results CSV). Exit codes: 0 ok, 2 user/config error,
3 data/version error, 4 internal contract violation. ``BB_LOG`` sets log
verbosity (DEBUG/INFO/WARNING/ERROR).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .benchmark import (
    configs_from_json,
    format_summary,
    parse_results_csv,
    records_to_csv,
    run_benchmark,
    summarize,
)
from .evaluators import eval_collision, eval_goal_reached
from .render import render_chart_svg, render_world_svg
from .roadmap import MapParseError, MapSemanticError
from .scenario import (
    DbFormatError,
    DbVersionError,
    GenerationError,
    build_world,
    db_load,
    db_save,
    generate_database,
    load_road_map,
)
from .world import BehaviorContractError, world_step

EXIT_OK = 0
EXIT_USER = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4

log = logging.getLogger("bbsim")


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_USER):
        super().__init__(message)
        self.code = code


def _read_text(path: Path, what: str) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise CliError(f"{what} not found: {path}") from None


def cmd_gen_db(args) -> int:
    config_path = Path(args.config)
    try:
        config = json.loads(_read_text(config_path, "config"))
    except json.JSONDecodeError as exc:
        raise CliError(f"invalid config JSON: {exc}") from None
    if "map" not in config or "sets" not in config:
        raise CliError("config must define 'map' and 'sets'")
    map_path = config_path.parent / config["map"]
    if not map_path.exists():
        raise CliError(f"map not found: {map_path}")
    map_content = map_path.read_text(encoding="utf-8")
    try:
        db = generate_database(config, map_content, args.seed)
    except (MapParseError, MapSemanticError, GenerationError, ValueError, KeyError) as exc:
        raise CliError(f"generation failed: {exc}") from None
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(db_save(db))
    total = sum(len(s) for s in db.sets.values())
    for name in sorted(db.sets):
        print(f"{name}: {len(db.sets[name])} scenarios")
    print(f"wrote {total} scenarios to {out}")
    return EXIT_OK


def _load_db(path: str):
    data = Path(path)
    if not data.exists():
        raise CliError(f"database not found: {data}")
    try:
        return db_load(data.read_bytes())
    except DbVersionError as exc:
        raise CliError(str(exc), EXIT_DATA) from None
    except DbFormatError as exc:
        raise CliError(f"corrupt database: {exc}", EXIT_DATA) from None


def cmd_run(args) -> int:
    db = _load_db(args.db)
    try:
        cfg_obj = json.loads(_read_text(Path(args.bench), "benchmark config"))
        cfgs = configs_from_json(cfg_obj)
    except (json.JSONDecodeError, ValueError, KeyError) as exc:
        raise CliError(f"invalid benchmark config: {exc}") from None
    if args.workers < 1:
        raise CliError("--workers must be >= 1")

    def progress(done, total):
        if done % 25 == 0 or done == total:
            log.info("benchmark %d/%d runs", done, total)

    records = run_benchmark(db, cfgs, args.workers, progress=progress)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(records_to_csv(records), encoding="utf-8", newline="")
    print(format_summary(summarize(records)))
    print(f"wrote {len(records)} records to {out}")
    return EXIT_OK


def cmd_replay(args) -> int:
    db = _load_db(args.db)
    set_name = args.config if args.config else sorted(db.sets)[0]
    if set_name not in db.sets:
        raise CliError(f"unknown scenario set {set_name!r} (have: {', '.join(sorted(db.sets))})")
    scenarios = db.sets[set_name]
    if not 0 <= args.index < len(scenarios):
        raise CliError(f"scenario index {args.index} out of range 0..{len(scenarios) - 1}")
    if args.every < 1:
        raise CliError("--every must be >= 1")
    scenario = scenarios[args.index]
    road_map = load_road_map(db, scenario)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        world = build_world(scenario, road_map)
    except Exception as exc:
        raise CliError(f"cannot build scenario: {exc}") from None
    snapshots = [world]
    written = []

    def emit(step: int):
        svg = render_world_svg(road_map, snapshots, scenario.controlled_id)
        path = out_dir / f"step_{step:04d}.svg"
        path.write_text(svg, encoding="utf-8", newline="")
        written.append(path)

    emit(0)
    reason = "MaxSteps"
    try:
        for step in range(1, scenario.horizon + 1):
            world = world_step(world, scenario.dt)
            snapshots.append(world)
            terminal = None
            if eval_collision(world, "controlled"):
                terminal = "Collision"
            elif eval_goal_reached(world, scenario.controlled_id):
                terminal = "GoalReached"
            if step % args.every == 0 or terminal or step == scenario.horizon:
                emit(step)
            if terminal:
                reason = terminal
                break
    except BehaviorContractError as exc:
        raise CliError(f"behavior contract violation: {exc}", EXIT_INTERNAL) from None
    print(f"replayed {set_name}[{args.index}]: {reason} after {world.step_index} steps")
    print(f"wrote {len(written)} SVG files to {out_dir}")
    return EXIT_OK


def cmd_chart(args) -> int:
    text = _read_text(Path(args.results), "results CSV")
    try:
        records = parse_results_csv(text)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    if not records:
        raise CliError("results CSV has no records")
    rows = summarize(records)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(render_chart_svg(rows), encoding="utf-8", newline="")
    print(f"wrote chart with {len(rows)} groups to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bbsim",
        description="Deterministic driving-behavior simulation and benchmarking.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-db", help="generate a scenario database from a config")
    p.add_argument("--config", required=True, help="generator config (JSON)")
    p.add_argument("--out", required=True, help="output database file")
    p.add_argument("--seed", type=int, default=None, help="override the config seed (u64)")
    p.set_defaults(func=cmd_gen_db)

    p = sub.add_parser("run", help="run a benchmark over a scenario database")
    p.add_argument("--db", required=True, help="scenario database file")
    p.add_argument("--bench", required=True, help="benchmark config (JSON)")
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    p.add_argument("--out", required=True, help="output results CSV")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("replay", help="replay one scenario, writing SVG frames")
    p.add_argument("--db", required=True, help="scenario database file")
    p.add_argument("--index", type=int, required=True, help="scenario index within the set")
    p.add_argument("--config", default=None, help="scenario set name (default: first set)")
    p.add_argument("--out-dir", required=True, help="output directory for SVG frames")
    p.add_argument("--every", type=int, default=1, help="render every k-th step")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("chart", help="render outcome-rate bars from a results CSV")
    p.add_argument("--results", required=True, help="results CSV from 'run'")
    p.add_argument("--out", required=True, help="output SVG file")
    p.set_defaults(func=cmd_chart)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("BB_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except BehaviorContractError as exc:
        print(f"internal contract violation: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
