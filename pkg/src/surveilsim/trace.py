"""Event trace records and their CSV serialization.

One row per simulation event.  Vector quantities (detection statistics,
routing probabilities, beliefs, retained beliefs) are flattened into
per-region columns.  Floats print with 9 significant digits, which
round-trips: parsing a written file and writing it again reproduces the
bytes.  The first line pins the schema version and region count; readers
refuse mismatched versions.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass

__all__ = ["TraceRecord", "Trace", "SCHEMA_VERSION", "write_trace", "read_trace"]

SCHEMA_VERSION = 1

EVENT_KINDS = ("enqueue", "allocate", "decide", "detect", "rest", "route")

_SCALAR_COLUMNS = (
    "time",
    "event",
    "region",
    "allocation",
    "decision",
    "queue_len",
    "utilization",
    "task_effectiveness",
)


@dataclass(frozen=True)
class TraceRecord:
    time: float
    event: str
    queue_len: int
    utilization: float
    task_effectiveness: float
    cusum: tuple[float, ...]
    q: tuple[float, ...]
    beliefs: tuple[float, ...]
    retained: tuple[float, ...]
    region: int | None = None
    allocation: float | None = None
    decision: int | None = None


@dataclass
class Trace:
    records: list[TraceRecord]
    region_count: int

    def events(self, kind: str) -> list[TraceRecord]:
        return [r for r in self.records if r.event == kind]


def _columns(m: int) -> list[str]:
    cols = list(_SCALAR_COLUMNS)
    for stem in ("lambda", "q", "belief", "retained"):
        cols.extend(f"{stem}_{k + 1}" for k in range(m))
    return cols


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, int):
        return str(value)
    return format(float(value), ".9g")


def write_trace(trace: Trace, path_or_file) -> None:
    if hasattr(path_or_file, "write"):
        _write(trace, path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            _write(trace, fh)


def _write(trace: Trace, fh) -> None:
    m = trace.region_count
    fh.write(f"# surveilsim-trace v{SCHEMA_VERSION} regions={m}\n")
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(_columns(m))
    for r in trace.records:
        row = [
            _fmt(r.time),
            r.event,
            _fmt(r.region),
            _fmt(r.allocation),
            _fmt(r.decision),
            _fmt(r.queue_len),
            _fmt(r.utilization),
            _fmt(r.task_effectiveness),
        ]
        for vec in (r.cusum, r.q, r.beliefs, r.retained):
            row.extend(_fmt(v) for v in vec)
        writer.writerow(row)


def trace_to_csv(trace: Trace) -> str:
    buf = io.StringIO()
    _write(trace, buf)
    return buf.getvalue()


def read_trace(path_or_file) -> Trace:
    if hasattr(path_or_file, "read"):
        return _read(path_or_file)
    with open(path_or_file, newline="") as fh:
        return _read(fh)


def _read(fh) -> Trace:
    header = fh.readline()
    match = re.match(r"# surveilsim-trace v(\d+) regions=(\d+)\s*$", header)
    if not match:
        raise ValueError(f"not a surveilsim trace: header {header!r}")
    version, m = int(match.group(1)), int(match.group(2))
    if version != SCHEMA_VERSION:
        raise ValueError(f"trace schema v{version} not supported (expected v{SCHEMA_VERSION})")
    reader = csv.reader(fh)
    columns = next(reader)
    if columns != _columns(m):
        raise ValueError("trace column set does not match the declared schema")
    records = []
    for row in reader:
        scalars, vectors = row[:8], row[8:]
        vecs = [tuple(float(v) for v in vectors[i * m : (i + 1) * m]) for i in range(4)]
        records.append(
            TraceRecord(
                time=float(scalars[0]),
                event=scalars[1],
                region=int(scalars[2]) if scalars[2] else None,
                allocation=float(scalars[3]) if scalars[3] else None,
                decision=int(scalars[4]) if scalars[4] else None,
                queue_len=int(scalars[5]),
                utilization=float(scalars[6]),
                task_effectiveness=float(scalars[7]),
                cusum=vecs[0],
                q=vecs[1],
                beliefs=vecs[2],
                retained=vecs[3],
            )
        )
    return Trace(records=records, region_count=m)
