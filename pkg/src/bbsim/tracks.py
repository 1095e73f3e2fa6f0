"""Recorded-track CSV ingestion.

Schema (a reduced form of public drone-dataset object lists), sorted by
(track_id, t), seconds and meters:

    track_id,t,x,y,theta,v,length,width
"""

from __future__ import annotations

import csv
import io
from typing import Sequence

from .behaviors import TrackRecord

TRACK_COLUMNS = ("track_id", "t", "x", "y", "theta", "v", "length", "width")


class TrackFormatError(ValueError):
    pass


def parse_tracks(text: str) -> list[TrackRecord]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise TrackFormatError("empty tracks file") from None
    if tuple(h.strip() for h in header) != TRACK_COLUMNS:
        raise TrackFormatError(
            f"bad header {header!r}, expected {','.join(TRACK_COLUMNS)}"
        )
    rows_by_id: dict[int, list[tuple]] = {}
    dims: dict[int, tuple[float, float]] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(TRACK_COLUMNS):
            raise TrackFormatError(f"line {lineno}: expected {len(TRACK_COLUMNS)} fields")
        try:
            tid = int(row[0])
            t, x, y, theta, v, length, width = (float(f) for f in row[1:])
        except ValueError as exc:
            raise TrackFormatError(f"line {lineno}: {exc}") from None
        if v < 0.0:
            raise TrackFormatError(f"line {lineno}: negative velocity")
        rows_by_id.setdefault(tid, []).append((t, x, y, theta, v))
        dims.setdefault(tid, (length, width))
    records = []
    for tid in sorted(rows_by_id):
        length, width = dims[tid]
        records.append(TrackRecord.from_samples(tid, rows_by_id[tid], length, width))
    return records


def load_tracks(path) -> list[TrackRecord]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_tracks(fh.read())


def dump_tracks(records: Sequence[TrackRecord]) -> str:
    """Canonical CSV text for a set of track records."""
    out = [",".join(TRACK_COLUMNS)]
    for rec in sorted(records, key=lambda r: r.track_id):
        for i in range(len(rec.t)):
            out.append(
                f"{rec.track_id},{rec.t[i]:.9g},{rec.x[i]:.9g},{rec.y[i]:.9g},"
                f"{rec.theta[i]:.9g},{rec.v[i]:.9g},{rec.length:.9g},{rec.width:.9g}"
            )
    return "\n".join(out) + "\n"
