"""Event-stream plumbing: reading, ground-truth handling, timed replay."""

from __future__ import annotations

import csv
import io
import json
import math
import time
import warnings
from dataclasses import dataclass, field, replace
from datetime import datetime
from pathlib import Path


class StreamFormatError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


class ReplayError(Exception):
    """Raised when the sink fails; position is the index of the offending event."""

    def __init__(self, position: int, cause: BaseException):
        super().__init__(f"sink failed at event {position}: {cause}")
        self.position = position
        self.cause = cause


@dataclass(frozen=True)
class UncorrelatedEvent:
    timestamp: datetime
    activity: str
    lifecycle: str | None = None
    resource: str | None = None
    case_id: int | str | None = None


_FALLBACK_FORMATS = ("%Y-%m-%d %H:%M:%S", "%Y-%m-%d %H:%M")


def parse_timestamp(text: str) -> datetime:
    raw = text.strip()
    try:
        return datetime.fromisoformat(raw)
    except ValueError:
        pass
    # tolerate unpadded month/day/hour, as produced by some exporters
    normalized = raw.replace("T", " ", 1)
    for fmt in _FALLBACK_FORMATS:
        try:
            return datetime.strptime(normalized, fmt)
        except ValueError:
            continue
    raise StreamFormatError("BAD_TIMESTAMP", f"cannot parse timestamp {text!r}")


def format_timestamp(ts: datetime) -> str:
    return ts.strftime("%Y-%m-%d %H:%M:%S")


def floor_to_second(ts: datetime) -> datetime:
    return ts.replace(microsecond=0)


def whole_seconds_between(start: datetime, end: datetime) -> int:
    """Signed difference in whole seconds, both ends floored to the second."""
    return int((floor_to_second(end) - floor_to_second(start)).total_seconds())


def _coerce_case_id(value) -> int | str | None:
    if value is None:
        return None
    text = str(value).strip()
    if not text:
        return None
    return int(text) if text.isdigit() else text


def _event_from_record(record: dict, position: int) -> UncorrelatedEvent:
    ts = record.get("timestamp")
    activity = record.get("activity")
    if ts is None or activity is None or not str(activity).strip():
        raise StreamFormatError("BAD_ROW", f"row {position}: needs timestamp and activity")
    lifecycle = record.get("lifecycle")
    lifecycle = str(lifecycle).strip().lower() or None if lifecycle is not None else None
    resource = record.get("resource")
    resource = str(resource).strip() or None if resource is not None else None
    return UncorrelatedEvent(
        timestamp=ts if isinstance(ts, datetime) else parse_timestamp(str(ts)),
        activity=str(activity).strip(),
        lifecycle=lifecycle,
        resource=resource,
        case_id=_coerce_case_id(record.get("case_id")),
    )


def read_events(source, fmt: str = "csv") -> tuple[UncorrelatedEvent, ...]:
    """Read an event stream from a path or open text stream.

    Events are returned in timestamp order; arrival order is kept among
    equal timestamps. An out-of-order source is sorted with a warning
    rather than rejected.
    """
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as handle:
            return read_events(handle, fmt=fmt)

    if fmt == "csv":
        reader = csv.DictReader(source)
        if reader.fieldnames is None:
            return ()
        missing = {"timestamp", "activity"} - set(reader.fieldnames)
        if missing:
            raise StreamFormatError("MISSING_COLUMN", f"missing column(s) {sorted(missing)}")
        events = [_event_from_record(row, i + 2) for i, row in enumerate(reader)]
    elif fmt == "jsonl":
        events = []
        for i, line in enumerate(source):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise StreamFormatError("BAD_ROW", f"line {i + 1}: {exc}") from exc
            events.append(_event_from_record(record, i + 1))
    else:
        raise StreamFormatError("UNKNOWN_FORMAT", f"unknown stream format {fmt!r}")

    if any(a.timestamp > b.timestamp for a, b in zip(events, events[1:])):
        warnings.warn("event stream out of order; sorting by timestamp", RuntimeWarning, stacklevel=2)
        events.sort(key=lambda e: e.timestamp)
    return tuple(events)


def events_to_csv(events) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["timestamp", "activity", "lifecycle", "resource", "case_id"])
    for ev in events:
        writer.writerow([
            format_timestamp(ev.timestamp),
            ev.activity,
            ev.lifecycle or "",
            ev.resource or "",
            "" if ev.case_id is None else ev.case_id,
        ])
    return buffer.getvalue()


@dataclass(frozen=True)
class GroundTruth:
    """True case ids keyed by (timestamp, activity, arrival ordinal).

    The ordinal disambiguates repeated occurrences of the same activity at
    the same instant, counted in arrival order, so stripping and relabeling
    a stream round-trips exactly.
    """

    mapping: dict[tuple[datetime, str, int], int | str]

    @classmethod
    def from_events(cls, events) -> "GroundTruth":
        mapping: dict[tuple[datetime, str, int], int | str] = {}
        seen: dict[tuple[datetime, str], int] = {}
        for ev in events:
            k = (ev.timestamp, ev.activity)
            ordinal = seen.get(k, 0)
            seen[k] = ordinal + 1
            mapping[(ev.timestamp, ev.activity, ordinal)] = ev.case_id
        return cls(mapping=mapping)

    def sequence_labels(self, events) -> list[int | str | None]:
        seen: dict[tuple[datetime, str], int] = {}
        labels: list[int | str | None] = []
        for ev in events:
            k = (ev.timestamp, ev.activity)
            ordinal = seen.get(k, 0)
            seen[k] = ordinal + 1
            labels.append(self.mapping.get((ev.timestamp, ev.activity, ordinal)))
        return labels

    def relabel(self, events) -> tuple[UncorrelatedEvent, ...]:
        labels = self.sequence_labels(events)
        return tuple(replace(ev, case_id=c) for ev, c in zip(events, labels))


def strip_case_ids(events) -> tuple[tuple[UncorrelatedEvent, ...], GroundTruth]:
    truth = GroundTruth.from_events(events)
    return tuple(replace(ev, case_id=None) for ev in events), truth


@dataclass
class ReplayReport:
    delivered: int = 0
    latencies: list[float] = field(default_factory=list)
    wall_seconds: float = 0.0


def replay(events, sink, speedup: float = math.inf) -> ReplayReport:
    """Feed events to sink, pacing inter-event gaps by the stream's own
    timestamps divided by speedup. Each delivery is scheduled against the
    replay start, so a slow sink eats into later waits instead of shifting
    the whole schedule. Infinite speedup delivers as fast as possible.

    The per-event latency recorded is the sink call duration in seconds.
    """
    if speedup <= 0:
        raise ValueError("speedup must be positive")
    report = ReplayReport()
    events = list(events)
    if not events:
        return report
    start_wall = time.monotonic()
    start_ts = events[0].timestamp
    for i, ev in enumerate(events):
        if math.isfinite(speedup):
            target = start_wall + (ev.timestamp - start_ts).total_seconds() / speedup
            delay = target - time.monotonic()
            if delay > 0:
                time.sleep(delay)
        before = time.perf_counter()
        try:
            sink(ev)
        except Exception as exc:
            report.wall_seconds = time.monotonic() - start_wall
            raise ReplayError(i, exc) from exc
        report.latencies.append(time.perf_counter() - before)
        report.delivered += 1
    report.wall_seconds = time.monotonic() - start_wall
    return report
