"""In-memory store of correlated event instances, one writer at a time.

The store keeps every materialized instance, the per-case views, and the
indexes the correlator queries while weighing candidate cases: occurrence
times per case and activity (anchor lookups), open started events awaiting
their completion, and the dependency alternatives already confirmed by a
fully trusted instance.
"""

from __future__ import annotations

import csv
import io
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from datetime import datetime

from .streams import format_timestamp


@dataclass(frozen=True)
class Allocation:
    """One way an event can belong to a case: the dependency alternative it
    satisfies there, the anchor instant that enabled it, and the implied
    duration classified as the average or one of the remaining window values.
    """

    case_id: int
    dependency_set: frozenset[str]
    anchor: datetime
    duration: int
    kind: str


@dataclass(frozen=True)
class CorrelatedEventInstance:
    timestamp: datetime
    activity: str
    case_id: int | None
    trust: float | None
    lifecycle: str | None = None
    resource: str | None = None
    allocations: tuple[Allocation, ...] = ()
    raw_trust: float | None = None
    noise_reason: str | None = None
    seq: int = -1

    def is_noise(self) -> bool:
        return self.noise_reason is not None


class CaseStore:
    def __init__(self):
        self._cases: dict[int, list[CorrelatedEventInstance]] = {}
        self._instances: list[CorrelatedEventInstance] = []
        self._noise: list[CorrelatedEventInstance] = []
        self._occurrences: dict[tuple[int, str], list[datetime]] = {}
        self._cases_with: dict[str, set[int]] = {}
        self._open_started: dict[tuple[int, str], list[CorrelatedEventInstance]] = {}
        self._certain_alts: dict[tuple[int, str], set[frozenset[str]]] = {}
        self._next_case = 1
        self._last_ts: datetime | None = None

    def __len__(self) -> int:
        return len(self._instances)

    def new_case_id(self) -> int:
        case_id = self._next_case
        self._next_case += 1
        self._cases[case_id] = []
        return case_id

    def add(self, instance: CorrelatedEventInstance, anchorable: bool = True) -> None:
        if self._last_ts is not None and instance.timestamp < self._last_ts:
            raise ValueError(f"OUT_OF_ORDER: {instance.timestamp} before {self._last_ts}")
        self._last_ts = instance.timestamp
        self._instances.append(instance)
        if instance.is_noise():
            self._noise.append(instance)
            return
        self._cases[instance.case_id].append(instance)
        if anchorable:
            self._occurrences.setdefault((instance.case_id, instance.activity), []).append(
                instance.timestamp
            )
            self._cases_with.setdefault(instance.activity, set()).add(instance.case_id)

    def case_ids(self) -> list[int]:
        return sorted(self._cases)

    def case_view(self, case_id: int) -> list[CorrelatedEventInstance]:
        return list(self._cases[case_id])

    def instances(self) -> list[CorrelatedEventInstance]:
        return list(self._instances)

    def noise(self) -> list[CorrelatedEventInstance]:
        return list(self._noise)

    def noise_count(self) -> int:
        return len(self._noise)

    # anchor lookups

    def cases_with(self, activity: str) -> set[int]:
        return set(self._cases_with.get(activity, ()))

    def occurrences_between(self, case_id: int, activity: str, lo: datetime, hi: datetime) -> list[datetime]:
        times = self._occurrences.get((case_id, activity), ())
        return list(times[bisect_left(times, lo):bisect_right(times, hi)])

    def has_occurrence_at_or_before(self, case_id: int, activity: str, ts: datetime) -> bool:
        times = self._occurrences.get((case_id, activity), ())
        return bool(times) and times[0] <= ts

    # started/completed pairing

    def push_open_started(self, instance: CorrelatedEventInstance) -> None:
        key = (instance.case_id, instance.activity)
        self._open_started.setdefault(key, []).append(instance)

    def peek_open_started(self, case_id: int, activity: str) -> CorrelatedEventInstance | None:
        queue = self._open_started.get((case_id, activity))
        return queue[0] if queue else None

    def pop_open_started(self, case_id: int, activity: str) -> CorrelatedEventInstance | None:
        queue = self._open_started.get((case_id, activity))
        return queue.pop(0) if queue else None

    def cases_with_open_started(self, activity: str) -> list[int]:
        return sorted(c for (c, a), queue in self._open_started.items() if a == activity and queue)

    # confirmed dependency alternatives, for loop-repeat exclusion

    def register_certain(self, case_id: int, activity: str, dependency_sets) -> None:
        bucket = self._certain_alts.setdefault((case_id, activity), set())
        bucket.update(dependency_sets)

    def certain_alternatives(self, case_id: int, activity: str) -> set[frozenset[str]]:
        return set(self._certain_alts.get((case_id, activity), ()))

    def export_log(self, threshold: float = 0.0) -> str:
        """Render stored instances at or above the trust threshold as CSV.

        Noise rows, having no trust, survive only a zero threshold. Rows are
        ordered by timestamp, noise after proper instances at the same
        instant, then by case id.
        """
        selected = []
        for inst in self._instances:
            if inst.is_noise():
                if threshold <= 0:
                    selected.append(inst)
            elif inst.trust is not None and inst.trust >= threshold:
                selected.append(inst)
        selected.sort(
            key=lambda i: (i.timestamp, 1 if i.is_noise() else 0, i.case_id if i.case_id is not None else 0)
        )
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["case_id", "timestamp", "activity", "trust", "lifecycle", "resource"])
        for inst in selected:
            writer.writerow([
                "" if inst.case_id is None else inst.case_id,
                format_timestamp(inst.timestamp),
                inst.activity,
                "" if inst.trust is None else f"{inst.trust:.2f}",
                inst.lifecycle or "",
                inst.resource or "",
            ])
        return buffer.getvalue()
