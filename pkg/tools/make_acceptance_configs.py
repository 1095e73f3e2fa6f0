"""Write the prediction-error experiment configs under assets/configs/.

Four scenario sets share identical sampled placements; they differ only in
the time-gap scale of the controlled agent's internal prediction model
(1.0 / 0.8 / 0.6 / 0.2 of the true 3 s time gap the surrounding drivers use).

Run from the repository root:  python tools/make_acceptance_configs.py
"""

from __future__ import annotations

import json
import pathlib

V_KMH = [40.0, 60.0]
IDM_TRUE = {"v0": 60.0 / 3.6, "a_max": 1.7, "tau": 3.0, "b": 1.7, "s0": 2.0}
TAU_SCALES = {"var00": 1.0, "var20": 0.8, "var40": 0.6, "var80": 0.2}


def entries(tau_scale: float, iterations: int = 500):
    return [
        {
            "source": 1,
            "count": [1, 1],
            "gap_range": [20.0, 30.0],
            "speed_range_kmh": V_KMH,
            "controlled": True,
            "behavior": {
                "kind": "mcts_single",
                "params": {"iterations": iterations},
                "prediction": {
                    "default": {"kind": "idm", "params": IDM_TRUE},
                    "perturb": {"tau": tau_scale},
                },
            },
            "goal": {"kind": "region_ahead", "lane": 2, "ahead": 45.0, "length": 12.0},
        },
        {
            "source": 1,
            "start_offset": 45.0,
            "count": [1, 1],
            "gap_range": [20.0, 30.0],
            "speed_range_kmh": V_KMH,
            "behavior": {"kind": "idm", "params": IDM_TRUE},
            "goal": {"kind": "lane_end", "lane": 1},
        },
        {
            "source": 2,
            "count": [5, 5],
            "gap_range": [20.0, 30.0],
            "speed_range_kmh": V_KMH,
            "behavior": {"kind": "idm", "params": IDM_TRUE},
            "goal": {"kind": "lane_end", "lane": 2},
        },
    ]


def gen_config(count: int = 100) -> dict:
    sets = []
    for i, (name, scale) in enumerate(TAU_SCALES.items()):
        entry = {"name": name, "count": count, "entries": entries(scale)}
        if i > 0:
            entry["placement_seed_of"] = 0  # identical placements across sets
        sets.append(entry)
    return {"map": "../maps/two_lane.bbmap", "seed": 2026, "dt": 0.2, "horizon": 30, "sets": sets}


def bench_config() -> dict:
    return {
        "configs": [
            {
                "name": "mcts500",
                "criteria": ["collision", "goal_reached", "max_steps"],
                "collision_scope": "controlled",
            }
        ]
    }


def iteration_bench_config() -> dict:
    configs = []
    for iters in (200, 2000):
        configs.append(
            {
                "name": f"mcts{iters}",
                "controlled_behavior": {
                    "kind": "mcts_single",
                    "params": {"iterations": iters},
                    "prediction": {
                        "default": {"kind": "idm", "params": IDM_TRUE},
                        "perturb": {"tau": 1.0},
                    },
                },
                "criteria": ["collision", "goal_reached", "max_steps"],
                "collision_scope": "controlled",
            }
        )
    return {"configs": configs}


def main() -> None:
    root = pathlib.Path(__file__).resolve().parents[1]
    out = root / "assets/configs"
    out.mkdir(parents=True, exist_ok=True)
    (out / "prediction_error_gen.json").write_text(json.dumps(gen_config(), indent=2) + "\n")
    (out / "prediction_error_bench.json").write_text(json.dumps(bench_config(), indent=2) + "\n")
    (out / "iteration_budget_bench.json").write_text(
        json.dumps(iteration_bench_config(), indent=2) + "\n"
    )
    print(f"wrote configs under {out}")


if __name__ == "__main__":
    main()
