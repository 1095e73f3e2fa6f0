import json
from pathlib import Path

import pytest

from bbsim.cli import main

ASSETS = Path(__file__).resolve().parents[1] / "assets"


def gen_config(map_rel, count=3, iterations=50):
    return {
        "map": map_rel,
        "seed": 4,
        "dt": 0.2,
        "horizon": 20,
        "sets": [
            {
                "name": "demo",
                "count": count,
                "entries": [
                    {
                        "source": 1,
                        "count": [1, 1],
                        "gap_range": [20, 30],
                        "speed_range_kmh": [40, 60],
                        "controlled": True,
                        "behavior": {
                            "kind": "mcts_single",
                            "params": {"iterations": iterations, "horizon_steps": 5},
                            "prediction": {
                                "default": {"kind": "idm", "params": {"v0": 14.0, "tau": 3.0}}
                            },
                        },
                        "goal": {"kind": "region_ahead", "lane": 2, "ahead": 40.0, "length": 12.0},
                    },
                    {
                        "source": 2,
                        "count": [2, 3],
                        "gap_range": [20, 30],
                        "speed_range_kmh": [40, 60],
                        "behavior": {"kind": "idm", "params": {"v0": 14.0, "tau": 3.0}},
                        "goal": {"kind": "lane_end", "lane": 2},
                    },
                ],
            }
        ],
    }


def bench_config():
    return {
        "configs": [
            {
                "name": "planner",
                "criteria": ["collision", "goal_reached", "max_steps"],
                "collision_scope": "controlled",
            }
        ]
    }


@pytest.fixture()
def workdir(tmp_path):
    cfg_dir = tmp_path / "cfg"
    cfg_dir.mkdir()
    (cfg_dir / "maps").mkdir()
    map_text = (ASSETS / "maps/two_lane.bbmap").read_text()
    (cfg_dir / "maps/two_lane.bbmap").write_text(map_text)
    (cfg_dir / "gen.json").write_text(json.dumps(gen_config("maps/two_lane.bbmap")))
    (cfg_dir / "bench.json").write_text(json.dumps(bench_config()))
    return tmp_path


class TestGenDb:
    def test_generates_db(self, workdir, capsys):
        rc = main(["gen-db", "--config", str(workdir / "cfg/gen.json"), "--out", str(workdir / "o.db"), "--seed", "4"])
        assert rc == 0
        assert (workdir / "o.db").exists()
        out = capsys.readouterr().out
        assert "demo: 3 scenarios" in out

    def test_missing_map_exits_2(self, workdir, capsys):
        cfg = gen_config("maps/nope.bbmap")
        (workdir / "cfg/bad.json").write_text(json.dumps(cfg))
        rc = main(["gen-db", "--config", str(workdir / "cfg/bad.json"), "--out", str(workdir / "o.db")])
        assert rc == 2
        assert "map not found" in capsys.readouterr().err

    def test_missing_config_exits_2(self, workdir, capsys):
        rc = main(["gen-db", "--config", str(workdir / "nope.json"), "--out", str(workdir / "o.db")])
        assert rc == 2

    def test_malformed_config_exits_2(self, workdir):
        (workdir / "cfg/broken.json").write_text("{not json")
        rc = main(["gen-db", "--config", str(workdir / "cfg/broken.json"), "--out", str(workdir / "o.db")])
        assert rc == 2

    def test_same_seed_byte_identical(self, workdir):
        for name in ("a.db", "b.db"):
            rc = main(["gen-db", "--config", str(workdir / "cfg/gen.json"), "--out", str(workdir / name), "--seed", "4"])
            assert rc == 0
        assert (workdir / "a.db").read_bytes() == (workdir / "b.db").read_bytes()


class TestRun:
    def db(self, workdir):
        main(["gen-db", "--config", str(workdir / "cfg/gen.json"), "--out", str(workdir / "o.db"), "--seed", "4"])
        return workdir / "o.db"

    def test_run_writes_csv_and_summary(self, workdir, capsys):
        db = self.db(workdir)
        rc = main(["run", "--db", str(db), "--bench", str(workdir / "cfg/bench.json"), "--workers", "1", "--out", str(workdir / "r.csv")])
        assert rc == 0
        lines = (workdir / "r.csv").read_text().strip().split("\n")
        assert len(lines) == 4  # header + 3 scenarios x 1 config
        out = capsys.readouterr().out
        assert "planner" in out and "success%" in out

    def test_worker_invariance_modulo_walltime(self, workdir):
        db = self.db(workdir)
        for workers, name in ((1, "w1.csv"), (4, "w4.csv")):
            rc = main(["run", "--db", str(db), "--bench", str(workdir / "cfg/bench.json"), "--workers", str(workers), "--out", str(workdir / name)])
            assert rc == 0

        def strip(path):
            lines = path.read_text().strip().split("\n")
            return [",".join(line.split(",")[:-1]) for line in lines]

        assert strip(workdir / "w1.csv") == strip(workdir / "w4.csv")

    def test_version_mismatch_exits_3(self, workdir, capsys):
        db = self.db(workdir)
        raw = bytearray(db.read_bytes())
        raw[4:6] = (9).to_bytes(2, "little")
        bad = workdir / "bad.db"
        bad.write_bytes(bytes(raw))
        rc = main(["run", "--db", str(bad), "--bench", str(workdir / "cfg/bench.json"), "--workers", "1", "--out", str(workdir / "r.csv")])
        assert rc == 3

    def test_malformed_bench_config_exits_2(self, workdir):
        db = self.db(workdir)
        (workdir / "cfg/badbench.json").write_text('{"configs": []}')
        rc = main(["run", "--db", str(db), "--bench", str(workdir / "cfg/badbench.json"), "--workers", "1", "--out", str(workdir / "r.csv")])
        assert rc == 2


class TestReplay:
    def db(self, workdir):
        main(["gen-db", "--config", str(workdir / "cfg/gen.json"), "--out", str(workdir / "o.db"), "--seed", "4"])
        return workdir / "o.db"

    def test_writes_frames(self, workdir):
        db = self.db(workdir)
        out_dir = workdir / "svg"
        rc = main(["replay", "--db", str(db), "--index", "0", "--config", "demo", "--out-dir", str(out_dir), "--every", "10"])
        assert rc == 0
        frames = sorted(out_dir.glob("step_*.svg"))
        assert frames and frames[0].name == "step_0000.svg"

    def test_polygon_per_agent_per_pose(self, workdir):
        db = self.db(workdir)
        out_dir = workdir / "svg2"
        rc = main(["replay", "--db", str(db), "--index", "0", "--config", "demo", "--out-dir", str(out_dir), "--every", "5"])
        assert rc == 0
        from bbsim.scenario import db_load

        database = db_load(db.read_bytes())
        n_agents = len(database.sets["demo"][0].agents)
        for frame in out_dir.glob("step_*.svg"):
            step = int(frame.stem.split("_")[1])
            text = frame.read_text()
            assert text.count('class="agent') == n_agents * (step + 1)

    def test_frame_count_for_full_run(self, workdir):
        # A run that reaches the horizon emits frames at steps 0, k, 2k, ...:
        # with 30 steps and k = 10 that is exactly 4 files.
        cfg = gen_config("maps/two_lane.bbmap", count=1)
        cfg["horizon"] = 30
        entry = cfg["sets"][0]["entries"][0]
        entry["behavior"] = {"kind": "const_vel", "params": {}}
        entry["goal"] = {"kind": "lane", "lane": 1, "min_arclength": 590.0}  # unreachable
        (workdir / "cfg/full.json").write_text(json.dumps(cfg))
        main(["gen-db", "--config", str(workdir / "cfg/full.json"), "--out", str(workdir / "f.db"), "--seed", "4"])
        out_dir = workdir / "frames"
        rc = main(["replay", "--db", str(workdir / "f.db"), "--index", "0", "--config", "demo", "--out-dir", str(out_dir), "--every", "10"])
        assert rc == 0
        names = sorted(p.name for p in out_dir.glob("*.svg"))
        assert names == ["step_0000.svg", "step_0010.svg", "step_0020.svg", "step_0030.svg"]

    def test_deterministic_bytes(self, workdir):
        db = self.db(workdir)
        for name in ("sa", "sb"):
            rc = main(["replay", "--db", str(db), "--index", "1", "--config", "demo", "--out-dir", str(workdir / name), "--every", "10"])
            assert rc == 0
        for fa in sorted((workdir / "sa").glob("*.svg")):
            fb = workdir / "sb" / fa.name
            assert fa.read_bytes() == fb.read_bytes()

    def test_index_out_of_range_exits_2(self, workdir):
        db = self.db(workdir)
        rc = main(["replay", "--db", str(db), "--index", "99", "--config", "demo", "--out-dir", str(workdir / "x"), "--every", "1"])
        assert rc == 2

    def test_unknown_set_exits_2(self, workdir):
        db = self.db(workdir)
        rc = main(["replay", "--db", str(db), "--index", "0", "--config", "nope", "--out-dir", str(workdir / "x"), "--every", "1"])
        assert rc == 2


class TestChart:
    def results(self, workdir):
        db_path = workdir / "o.db"
        main(["gen-db", "--config", str(workdir / "cfg/gen.json"), "--out", str(db_path), "--seed", "4"])
        main(["run", "--db", str(db_path), "--bench", str(workdir / "cfg/bench.json"), "--workers", "1", "--out", str(workdir / "r.csv")])
        return workdir / "r.csv"

    def test_chart_groups(self, workdir):
        res = self.results(workdir)
        rc = main(["chart", "--results", str(res), "--out", str(workdir / "chart.svg")])
        assert rc == 0
        text = (workdir / "chart.svg").read_text()
        assert text.count('class="bar success"') == 1  # one (set, config) group
        assert 'class="bar collision"' in text

    def test_chart_group_per_set_config_pair(self, workdir):
        # 1 set x 2 configs -> 2 bar groups.
        db_path = workdir / "o.db"
        main(["gen-db", "--config", str(workdir / "cfg/gen.json"), "--out", str(db_path), "--seed", "4"])
        two = bench_config()
        two["configs"].append(dict(two["configs"][0], name="second"))
        (workdir / "cfg/two.json").write_text(json.dumps(two))
        main(["run", "--db", str(db_path), "--bench", str(workdir / "cfg/two.json"), "--workers", "1", "--out", str(workdir / "r2.csv")])
        rc = main(["chart", "--results", str(workdir / "r2.csv"), "--out", str(workdir / "chart2.svg")])
        assert rc == 0
        text = (workdir / "chart2.svg").read_text()
        assert text.count('class="bar success"') == 2

    def test_rates_match_summarize(self, workdir):
        from bbsim.benchmark import parse_results_csv, summarize

        res = self.results(workdir)
        rows = summarize(parse_results_csv(res.read_text()))
        main(["chart", "--results", str(res), "--out", str(workdir / "chart.svg")])
        text = (workdir / "chart.svg").read_text()
        # Bar height is proportional to the rate (plot height 270 at 100%).
        import re

        success_bar = re.search(r'class="bar success" x="[0-9.]+" y="[0-9.]+" width="[0-9.]+" height="([0-9.]+)"', text)
        assert success_bar
        assert float(success_bar.group(1)) == pytest.approx(270.0 * rows[0].success_rate / 100.0, abs=0.2)

    def test_empty_csv_exits_2(self, workdir):
        (workdir / "empty.csv").write_text("")
        rc = main(["chart", "--results", str(workdir / "empty.csv"), "--out", str(workdir / "c.svg")])
        assert rc == 2

    def test_missing_column_exits_2(self, workdir, capsys):
        (workdir / "cols.csv").write_text("scenario_set,scenario_index\na,1\n")
        rc = main(["chart", "--results", str(workdir / "cols.csv"), "--out", str(workdir / "c.svg")])
        assert rc == 2
        assert "missing columns" in capsys.readouterr().err


class TestHelp:
    @pytest.mark.parametrize("cmd", [[], ["gen-db"], ["run"], ["replay"], ["chart"]])
    def test_help_exits_zero(self, cmd, capsys):
        with pytest.raises(SystemExit) as exc:
            main(cmd + ["--help"])
        assert exc.value.code == 0
        out = capsys.readouterr().out
        assert "--help" in out or "usage" in out
