"""Piecewise-constant exogenous time series.

On-site generation and outside temperature enter the simulation as step
functions: a strictly ascending list of (time, value) breakpoints where the
value at breakpoint t_i holds on the right-open interval [t_i, t_{i+1}).
Step traces keep the event engine exact; a sampled series can be converted
with :func:`resample` at whatever resolution the caller wants.
"""

from __future__ import annotations

import csv
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import QueryBeforeTraceStart, ScenarioInvalid
from .tolerances import EPS_TIME

TRACE_CSV_HEADER = ("time_h", "value")


@dataclass(frozen=True)
class StepTrace:
    breakpoints: tuple[tuple[float, float], ...]
    _times: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        pts = tuple((float(t), float(v)) for t, v in self.breakpoints)
        if not pts:
            raise ScenarioInvalid("a step trace needs at least one breakpoint")
        times = tuple(t for t, _ in pts)
        for a, b in zip(times, times[1:]):
            if not b > a:
                raise ScenarioInvalid(
                    f"trace breakpoints must strictly ascend, got t={a} then t={b}"
                )
        object.__setattr__(self, "breakpoints", pts)
        object.__setattr__(self, "_times", times)

    @property
    def start(self) -> float:
        return self._times[0]

    def value_at(self, t: float) -> float:
        """Value of the interval containing t (right-continuous at breakpoints).

        Queries within EPS_TIME below a breakpoint snap onto it, so an event
        scheduled at a breakpoint sees the new value even with float drift.
        """
        i = bisect_right(self._times, t + EPS_TIME) - 1
        if i < 0:
            raise QueryBeforeTraceStart(
                f"t={t} precedes the trace start at t={self._times[0]}"
            )
        return self.breakpoints[i][1]

    def next_breakpoint_after(self, t: float) -> float:
        """Smallest breakpoint time strictly greater than t, or +inf."""
        i = bisect_right(self._times, t + EPS_TIME)
        return self._times[i] if i < len(self._times) else math.inf

    def has_breakpoint_at(self, t: float) -> bool:
        i = bisect_right(self._times, t + EPS_TIME) - 1
        return i >= 0 and abs(self._times[i] - t) <= EPS_TIME


def sum_traces(a: StepTrace, b: StepTrace) -> StepTrace:
    """Pointwise sum with merged breakpoints.

    Defined from the later of the two starts onward.
    """
    start = max(a.start, b.start)
    times = sorted({t for t, _ in a.breakpoints if t >= start}
                   | {t for t, _ in b.breakpoints if t >= start})
    return StepTrace(tuple((t, a.value_at(t) + b.value_at(t)) for t in times))


def resample(times: Sequence[float], values: Sequence[float], resolution: float) -> StepTrace:
    """Sample-and-hold a sampled series onto a uniform step grid.

    The grid starts at the first sample time and steps by `resolution`;
    consecutive equal values collapse into one breakpoint.
    """
    if len(times) != len(values) or not times:
        raise ScenarioInvalid("resample needs equally long, non-empty time/value lists")
    if resolution <= 0:
        raise ScenarioInvalid("resample resolution must be positive")
    pts: list[tuple[float, float]] = []
    t = float(times[0])
    end = float(times[-1])
    k = 0
    while t <= end + EPS_TIME:
        i = bisect_right(times, t + EPS_TIME) - 1
        v = float(values[i])
        if not pts or pts[-1][1] != v:
            pts.append((t, v))
        k += 1
        t = float(times[0]) + k * resolution
    return StepTrace(tuple(pts))


def read_trace_csv(path: str | Path) -> StepTrace:
    """Parse a `time_h,value` CSV into a step trace.

    Errors carry the offending line number.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != TRACE_CSV_HEADER:
        raise ScenarioInvalid(f"{path}:1: trace CSV must start with header 'time_h,value'")
    pts: list[tuple[float, float]] = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 2:
            raise ScenarioInvalid(f"{path}:{lineno}: expected two columns, got {len(row)}")
        try:
            pts.append((float(row[0]), float(row[1])))
        except ValueError as exc:
            raise ScenarioInvalid(f"{path}:{lineno}: {exc}") from None
    try:
        return StepTrace(tuple(pts))
    except ScenarioInvalid as exc:
        raise ScenarioInvalid(f"{path}: {exc}") from None


def write_trace_csv(trace: StepTrace, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_CSV_HEADER)
        for t, v in trace.breakpoints:
            writer.writerow([repr(t), repr(v)])
