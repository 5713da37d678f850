"""Assigns each arriving unlabeled event to one or more candidate cases.

Every way an event can extend a stored case is an allocation: the case, the
dependency alternative it satisfies there, the anchor occurrence that enabled
it, and the implied duration. The event is materialized once per candidate
case, and each instance carries a trust score aggregating the probabilities
of its allocations given how many allocations the event produced in total.
An event with no allocation at all is kept as noise.
"""

from __future__ import annotations

from datetime import timedelta

from .store import Allocation, CaseStore, CorrelatedEventInstance
from .streams import whole_seconds_between

KIND_AVG = "avg"
KIND_RANGE = "range"

MODE_PAIRED = "paired"
MODE_COMPLETED = "completed"


class CorrelationError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


def instance_probability(m: int, kind: str, activity: str, table) -> float:
    """Probability that one allocation out of m is the true assignment.

    A lone allocation is certain. With competition, a duration equal to the
    activity's average is favored: it gets the whole average share plus an
    equal split of the residue, while each remaining window value shares its
    own slice among the competitors.
    """
    if m < 1:
        raise ValueError(f"m must be at least 1, got {m}")
    if m == 1:
        return 1.0
    if kind == KIND_AVG:
        return (m + 1) / (m * m)
    if kind == KIND_RANGE:
        size = len(table.range_of(activity))
        if size == 0:
            raise CorrelationError(
                "DEGENERATE_RANGE",
                f"{activity}: window has no values besides the average",
            )
        return (m - 1 / size) / (m * m)
    raise ValueError(f"unknown allocation kind {kind!r}")


class Correlator:
    """Single-pass correlator over a timestamp-ordered event stream.

    The stream's first event fixes the mode: a `started` lifecycle selects
    paired operation, where started events are allocated through task
    dependencies and completions close their earliest open counterpart;
    anything else selects completions-only operation, where every event is
    allocated through task dependencies directly.
    """

    def __init__(self, td, table, store: CaseStore | None = None):
        missing = sorted(td.activities() - table.activities())
        if missing:
            raise CorrelationError(
                "MISSING_HEURISTIC", f"no duration window for: {', '.join(missing)}"
            )
        self.td = td
        self.table = table
        self.store = store if store is not None else CaseStore()
        self._mode: str | None = None
        self._seq = 0
        self._last_ts = None

    @property
    def mode(self) -> str | None:
        return self._mode

    def ingest(self, event) -> list[CorrelatedEventInstance]:
        """Process one event, returning its stored instances by case order."""
        if self._last_ts is not None and event.timestamp < self._last_ts:
            raise CorrelationError(
                "OUT_OF_ORDER", f"{event.timestamp} arrived after {self._last_ts}"
            )
        self._last_ts = event.timestamp
        if self._mode is None:
            self._mode = MODE_PAIRED if event.lifecycle == "started" else MODE_COMPLETED

        seq = self._seq
        self._seq += 1

        if event.activity not in self.td.activities():
            return [self._stash_noise(event, seq, "unknown-activity")]
        self._check_lifecycle(event)

        if self._opens_case(event):
            return [self._open_case(event, seq)]

        allocations = self.candidate_allocations(event)
        if not allocations:
            return [self._stash_noise(event, seq, "no-allocation")]

        by_case: dict[int, list[Allocation]] = {}
        for alloc in allocations:
            by_case.setdefault(alloc.case_id, []).append(alloc)
        m = len(allocations)

        is_started = event.lifecycle == "started"
        instances = []
        for case_id in sorted(by_case):
            allocs = sorted(
                by_case[case_id],
                key=lambda a: (a.anchor, a.duration, a.kind, tuple(sorted(a.dependency_set))),
            )
            raw = 100.0 * sum(
                instance_probability(m, a.kind, event.activity, self.table) for a in allocs
            )
            instances.append(
                CorrelatedEventInstance(
                    timestamp=event.timestamp,
                    activity=event.activity,
                    case_id=case_id,
                    trust=min(100.0, raw),
                    lifecycle=event.lifecycle,
                    resource=event.resource,
                    allocations=tuple(allocs),
                    raw_trust=raw,
                    seq=seq,
                )
            )

        for inst in instances:
            self.store.add(inst, anchorable=not is_started)
            if is_started:
                self.store.push_open_started(inst)
            elif self._mode == MODE_PAIRED:
                self.store.pop_open_started(inst.case_id, inst.activity)
            if inst.trust >= 100.0 - 1e-9:
                confirmed = {a.dependency_set for a in inst.allocations if a.dependency_set}
                if confirmed:
                    self.store.register_certain(inst.case_id, inst.activity, confirmed)
        return instances

    def candidate_allocations(self, event) -> set[Allocation]:
        """Every allocation the event would produce against the current store.

        Pure query: the store is not changed. Events of activities without
        dependencies open fresh cases instead of allocating, so they yield
        nothing here.
        """
        if event.activity not in self.td.activities():
            return set()
        if self._mode == MODE_PAIRED and event.lifecycle != "started":
            return self._pairing_allocations(event)
        return self._dependency_allocations(event)

    # internals

    def _opens_case(self, event) -> bool:
        if self.td.alternatives(event.activity):
            return False
        return self._mode == MODE_COMPLETED or event.lifecycle == "started"

    def _open_case(self, event, seq: int) -> CorrelatedEventInstance:
        case_id = self.store.new_case_id()
        inst = CorrelatedEventInstance(
            timestamp=event.timestamp,
            activity=event.activity,
            case_id=case_id,
            trust=100.0,
            lifecycle=event.lifecycle,
            resource=event.resource,
            raw_trust=100.0,
            seq=seq,
        )
        is_started = event.lifecycle == "started"
        self.store.add(inst, anchorable=not is_started)
        if is_started:
            self.store.push_open_started(inst)
        return inst

    def _stash_noise(self, event, seq: int, reason: str) -> CorrelatedEventInstance:
        inst = CorrelatedEventInstance(
            timestamp=event.timestamp,
            activity=event.activity,
            case_id=None,
            trust=None,
            lifecycle=event.lifecycle,
            resource=event.resource,
            noise_reason=reason,
            seq=seq,
        )
        self.store.add(inst)
        return inst

    def _check_lifecycle(self, event) -> None:
        if self._mode == MODE_COMPLETED:
            if event.lifecycle == "started":
                raise CorrelationError(
                    "MIXED_LIFECYCLE",
                    "stream opened without lifecycle pairing; started events not allowed",
                )
        elif event.lifecycle not in ("started", "completed"):
            raise CorrelationError(
                "MIXED_LIFECYCLE",
                f"paired stream needs started/completed lifecycles, got {event.lifecycle!r}",
            )

    def _dependency_allocations(self, event) -> set[Allocation]:
        activity = event.activity
        ts = event.timestamp
        mn, mx = self.table.window(activity)
        avg = self.table.avg(activity)
        # widened by a second so sub-second anchors are not cut off before
        # the whole-second duration check
        lo = ts - timedelta(seconds=mx + 1)
        out: set[Allocation] = set()
        for dep_set in self.td.alternatives(activity):
            members = sorted(dep_set)
            candidate_cases: set[int] | None = None
            for member in members:
                cases = self.store.cases_with(member)
                candidate_cases = cases if candidate_cases is None else candidate_cases & cases
                if not candidate_cases:
                    break
            if not candidate_cases:
                continue
            # an alternative whose members can all re-occur in a loop may be
            # satisfied again; anything else is spent once confirmed
            reusable = all(self.td.is_loop_entry(x) for x in members)
            for case_id in candidate_cases:
                if not reusable and dep_set in self.store.certain_alternatives(case_id, activity):
                    continue
                anchors: set = set()
                for member in members:
                    anchors.update(self.store.occurrences_between(case_id, member, lo, ts))
                for anchor in anchors:
                    duration = whole_seconds_between(anchor, ts)
                    if not mn <= duration <= mx:
                        continue
                    if not all(
                        self.store.has_occurrence_at_or_before(case_id, x, anchor)
                        for x in members
                    ):
                        continue
                    out.add(
                        Allocation(
                            case_id=case_id,
                            dependency_set=dep_set,
                            anchor=anchor,
                            duration=duration,
                            kind=KIND_AVG if duration == avg else KIND_RANGE,
                        )
                    )
        return out

    def _pairing_allocations(self, event) -> set[Allocation]:
        activity = event.activity
        mn, mx = self.table.window(activity)
        avg = self.table.avg(activity)
        out: set[Allocation] = set()
        for case_id in self.store.cases_with_open_started(activity):
            started = self.store.peek_open_started(case_id, activity)
            duration = whole_seconds_between(started.timestamp, event.timestamp)
            if mn <= duration <= mx:
                out.add(
                    Allocation(
                        case_id=case_id,
                        dependency_set=frozenset(),
                        anchor=started.timestamp,
                        duration=duration,
                        kind=KIND_AVG if duration == avg else KIND_RANGE,
                    )
                )
        return out
