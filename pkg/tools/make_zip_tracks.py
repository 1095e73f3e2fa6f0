"""Generate the synthetic zip-merge recording shipped under assets/tracks/.

Four vehicles merge zipper-style at the junction of assets/maps/zip_merge.bbmap:
64 (main) and 65 (main follower) drive lane 1 -> 3; 66 and 67 enter on the
merge lane 2 -> 3 and slot in between, alternating. The recorded follower 65
opens a gap for 66 the way a human driver would; replacement experiments swap
it (and others) for behavior models.

Run from the repository root:  python tools/make_zip_tracks.py
"""

from __future__ import annotations

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from bbsim.behaviors import TrackRecord
from bbsim.geometry import point_at_arclength
from bbsim.roadmap import LaneGoal, compute_road_corridor, parse_map
from bbsim.tracks import dump_tracks

T_START = 230.0
T_END = 265.0
DT = 0.1
LENGTH = 4.0
WIDTH = 1.8


def profile_states(corridor, s0: float, v0: float, accel_segments):
    """Integrate piecewise-constant accelerations at the recording rate.

    accel_segments: list of (t_from, t_to, accel); zero acceleration elsewhere.
    """
    n = int(round((T_END - T_START) / DT))
    samples = []
    s = s0
    v = v0
    for i in range(n + 1):
        t = (int(T_START * 10) + i) / 10.0
        point, heading = point_at_arclength(corridor.center, min(s, corridor.center.length))
        samples.append((t, point.x, point.y, heading, v))
        a = 0.0
        for t_from, t_to, acc in accel_segments:
            if t_from <= t < t_to:
                a = acc
                break
        v = max(0.0, v + a * DT)
        s += v * DT
    return samples


def main() -> None:
    root = pathlib.Path(__file__).resolve().parents[1]
    road_map = parse_map((root / "assets/maps/zip_merge.bbmap").read_text(), "zip_merge")
    main_corridor = compute_road_corridor(road_map, 1, LaneGoal(3, 0.0))
    merge_corridor = compute_road_corridor(road_map, 2, LaneGoal(3, 0.0))

    # Recorded traffic flows at 3.5 m/s, below the replacement models'
    # desired 5 m/s, so a following model closes onto its leader and its
    # minimum-distance parameter picks its equilibrium position. The merger 66
    # cuts in at a fixed recorded slot; whether that slot is clear depends on
    # how far back the (possibly replaced) follower 65 sits.
    records = [
        # 64: main-lane leader, constant 3.5 m/s.
        TrackRecord.from_samples(64, profile_states(main_corridor, 31.0, 3.5, []), LENGTH, WIDTH),
        # 66: first merger; reaches the cut-in zone around t = 255, right at
        # the nose of a minimum-distance follower on the main lane.
        TrackRecord.from_samples(66, profile_states(merge_corridor, 22.5, 3.5, []), LENGTH, WIDTH),
        # 65: main-lane follower; the recorded driver yields between 249 and
        # 258 to open the zip gap for 66, then closes up again.
        TrackRecord.from_samples(
            65,
            profile_states(
                main_corridor,
                18.0,
                3.5,
                [(249.0, 252.0, -0.5), (255.0, 258.0, 0.5)],
            ),
            LENGTH,
            WIDTH,
        ),
        # 67: second merger, slower, joining far behind the zip.
        TrackRecord.from_samples(67, profile_states(merge_corridor, 13.7, 3.0, []), LENGTH, WIDTH),
    ]
    out = root / "assets/tracks/zip_merge_tracks.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(dump_tracks(records), encoding="utf-8", newline="")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
