"""Simulation output: per-event records, the horizon summary, and file io.

A timeline holds one record per significant moment.  Every quantity in a
record is constant on the right-open interval up to the next record except
s, r, o, and soc, which evolve linearly with the slopes implied by the
executing set and battery power.  The summary is the horizon-level verdict:
feasible iff no deficiency anywhere and no deadline miss.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence

from .errors import ScenarioInvalid
from .scheduler import AdmissionResult
from .sma_state import LoadState, PhaseCursor
from .tolerances import EPS_POWER

if TYPE_CHECKING:
    from .scenario import Scenario


@dataclass(frozen=True)
class TimelineRecord:
    t: float
    event_kind: str                 # highest-precedence event at this instant
    events: tuple[str, ...]         # every event kind that fired here
    op_set: frozenset[int]
    loads: dict[int, LoadState]     # state snapshots, right-continuous at t
    eg: float
    demand: float
    battery_power: float
    soc: float
    deficiency: float
    admission: AdmissionResult | None = None  # kept for certificate replay


@dataclass(frozen=True)
class DeficiencyInterval:
    start: float
    end: float
    peak: float    # kW
    energy: float  # kWh


@dataclass(frozen=True)
class DeadlineMiss:
    load_id: int
    instance: int
    t: float


@dataclass(frozen=True)
class Completion:
    load_id: int
    instance: int
    t: float


@dataclass(frozen=True)
class TimelineSummary:
    feasible: bool
    deficiency_intervals: tuple[DeficiencyInterval, ...]
    deadline_misses: tuple[DeadlineMiss, ...]


@dataclass(frozen=True)
class Timeline:
    records: tuple[TimelineRecord, ...]
    summary: TimelineSummary
    completions: tuple[Completion, ...]
    scenario: "Scenario | None" = None


def deficiency_intervals_from_steps(
    points: Sequence[tuple[float, float]],
) -> tuple[DeficiencyInterval, ...]:
    """Maximal positive runs of a piecewise-constant deficiency profile.

    `points` are (time, kW) pairs, strictly ascending in time; the last pair
    closes the horizon and contributes no width.  Energies are exact
    rectangle areas.
    """
    intervals: list[DeficiencyInterval] = []
    start = peak = energy = None
    for (t, d), (t_next, _) in zip(points, points[1:]):
        if d > EPS_POWER:
            if start is None:
                start, peak, energy = t, d, 0.0
            peak = max(peak, d)
            energy += d * (t_next - t)
            end = t_next
        elif start is not None:
            intervals.append(DeficiencyInterval(start, end, peak, energy))
            start = None
    if start is not None:
        intervals.append(DeficiencyInterval(start, end, peak, energy))
    if points and points[-1][1] > EPS_POWER:
        # Deficiency exactly at the closing instant: zero-width, zero-energy,
        # but still a violation of the horizon verdict.
        t, d = points[-1]
        if not intervals or intervals[-1].end < t:
            intervals.append(DeficiencyInterval(t, t, d, 0.0))
        else:
            last = intervals[-1]
            intervals[-1] = DeficiencyInterval(last.start, t, max(last.peak, d), last.energy)
    return tuple(intervals)


def summarize(records: Sequence[TimelineRecord],
              deadline_misses: Iterable[DeadlineMiss]) -> TimelineSummary:
    misses = tuple(deadline_misses)
    intervals = deficiency_intervals_from_steps([(r.t, r.deficiency) for r in records])
    return TimelineSummary(
        feasible=not intervals and not misses,
        deficiency_intervals=intervals,
        deadline_misses=misses,
    )


# ---------------------------------------------------------------------------
# CSV / JSON serialisation


def _load_ids(timeline: Timeline) -> list[int]:
    if timeline.scenario is not None:
        return [spec.id for spec in timeline.scenario.loads]
    ids: set[int] = set()
    for rec in timeline.records:
        ids.update(rec.loads)
    return sorted(ids)


def write_timeline_csv(timeline: Timeline, path: str | Path) -> None:
    """One row per record; floats use their shortest round-trip form.

    Columns: t_h, event_kind, op_set (semicolon-joined ids), demand_kw,
    eg_kw, battery_kw, soc, deficiency_kw, then s/r/o per load, then a
    `misses` column marking deadline misses latched at that instant as
    semicolon-joined load:instance pairs.
    """
    ids = _load_ids(timeline)
    misses_by_t: dict[float, list[DeadlineMiss]] = {}
    for m in timeline.summary.deadline_misses:
        misses_by_t.setdefault(m.t, []).append(m)
    header = ["t_h", "event_kind", "op_set", "demand_kw", "eg_kw",
              "battery_kw", "soc", "deficiency_kw"]
    for lid in ids:
        header += [f"s_{lid}", f"r_{lid}", f"o_{lid}"]
    header.append("misses")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for rec in timeline.records:
            row = [repr(rec.t), rec.event_kind,
                   ";".join(str(i) for i in sorted(rec.op_set)),
                   repr(rec.demand), repr(rec.eg), repr(rec.battery_power),
                   repr(rec.soc), repr(rec.deficiency)]
            for lid in ids:
                st = rec.loads[lid]
                row += [repr(st.s), repr(st.r), repr(st.o)]
            row.append(";".join(f"{m.load_id}:{m.instance}"
                                for m in misses_by_t.get(rec.t, [])))
            writer.writerow(row)


def read_timeline_csv(path: str | Path) -> Timeline:
    """Reconstruct a timeline from its CSV form.

    Phase cursors and admission details are not serialised; the summary is
    recomputed from the parsed rows with the same arithmetic the engine
    uses, so it matches the original exactly.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ScenarioInvalid(f"{path}: empty timeline CSV")
    header = rows[0]
    fixed = ["t_h", "event_kind", "op_set", "demand_kw", "eg_kw",
             "battery_kw", "soc", "deficiency_kw"]
    if header[: len(fixed)] != fixed or not header or header[-1] != "misses":
        raise ScenarioInvalid(f"{path}:1: unrecognised timeline CSV header")
    ids = []
    for name in header[len(fixed):-1:3]:
        if not name.startswith("s_"):
            raise ScenarioInvalid(f"{path}:1: expected s_<id> column, got {name!r}")
        ids.append(int(name[2:]))
    records: list[TimelineRecord] = []
    misses: list[DeadlineMiss] = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        try:
            t = float(row[0])
            op = frozenset(int(x) for x in row[2].split(";") if x)
            loads: dict[int, LoadState] = {}
            for j, lid in enumerate(ids):
                base = len(fixed) + 3 * j
                loads[lid] = LoadState(s=float(row[base]), r=float(row[base + 1]),
                                       o=float(row[base + 2]), phase=PhaseCursor(0, 0.0))
            for token in row[-1].split(";"):
                if token:
                    lid_s, inst_s = token.split(":")
                    misses.append(DeadlineMiss(int(lid_s), int(inst_s), t))
            records.append(TimelineRecord(
                t=t, event_kind=row[1], events=(row[1],), op_set=op, loads=loads,
                demand=float(row[3]), eg=float(row[4]), battery_power=float(row[5]),
                soc=float(row[6]), deficiency=float(row[7])))
        except (ValueError, IndexError) as exc:
            raise ScenarioInvalid(f"{path}:{lineno}: {exc}") from None
    return Timeline(records=tuple(records),
                    summary=summarize(records, misses),
                    completions=())


def timeline_to_json_dict(timeline: Timeline) -> dict:
    ids = _load_ids(timeline)
    return {
        "records": [
            {
                "t_h": rec.t,
                "event_kind": rec.event_kind,
                "events": list(rec.events),
                "op_set": sorted(rec.op_set),
                "demand_kw": rec.demand,
                "eg_kw": rec.eg,
                "battery_kw": rec.battery_power,
                "soc": rec.soc,
                "deficiency_kw": rec.deficiency,
                "loads": {
                    str(lid): {
                        "s": rec.loads[lid].s,
                        "r": rec.loads[lid].r,
                        "o": rec.loads[lid].o,
                        "phase_index": rec.loads[lid].phase.index,
                        "phase_consumed": rec.loads[lid].phase.consumed,
                    }
                    for lid in ids
                },
            }
            for rec in timeline.records
        ],
        "summary": {
            "feasible": timeline.summary.feasible,
            "deficiency_intervals": [
                {"start_h": iv.start, "end_h": iv.end,
                 "peak_kw": iv.peak, "energy_kwh": iv.energy}
                for iv in timeline.summary.deficiency_intervals
            ],
            "deadline_misses": [
                {"load": m.load_id, "instance": m.instance, "t_h": m.t}
                for m in timeline.summary.deadline_misses
            ],
        },
        "completions": [
            {"load": c.load_id, "instance": c.instance, "t_h": c.t}
            for c in timeline.completions
        ],
    }


def write_timeline_json(timeline: Timeline, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(timeline_to_json_dict(timeline), fh, indent=2)
        fh.write("\n")
