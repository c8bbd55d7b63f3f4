"""Per-load scheduling state and its event-to-event evolution.

Each load carries a triple (s, r, o):

* s -- hours until the next instance release
* r -- remaining operation time of the effective instance
* o -- hours elapsed since that instance's release while it stays incomplete

Between events the triple evolves linearly: executing loads trade r for o
one-for-one while s falls; idle loads keep r and age o only while work is
outstanding.  A release resets the triple to (period, full work, 0).  The
non-deferrable set and the per-load event horizons both fall straight out
of the triple.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping

from .errors import EventSkipped, NotAtReleaseInstant
from .loads import EffectiveParams
from .tolerances import EPS_TIME


@dataclass(frozen=True)
class PhaseCursor:
    """Position inside an instance: current phase and hours consumed in it.

    `index` equals the phase count once the instance has finished.
    """

    index: int
    consumed: float


@dataclass(frozen=True)
class LoadState:
    s: float
    r: float
    o: float
    phase: PhaseCursor = PhaseCursor(0, 0.0)
    deadline_missed: bool = False


@dataclass
class SmaVector:
    """Joint state of every load at one instant."""

    states: dict[int, LoadState]
    t: float


def reset_on_release(state: LoadState, params: EffectiveParams) -> LoadState:
    """Start the instance released now.

    s returns to the full period, r to the instance's work budget, o to
    zero, and the cursor to the top of phase 0.  An unfinished previous
    instance (r > 0) is discarded by this reset; the caller is responsible
    for logging that overrun before calling.
    """
    if abs(state.s) > EPS_TIME:
        raise NotAtReleaseInstant(f"s={state.s}, release is not due now")
    work = params.C if params.C > EPS_TIME else 0.0
    return LoadState(s=params.T, r=work, o=0.0, phase=PhaseCursor(0, 0.0))


def advance(state: LoadState, dt: float, executing: bool) -> LoadState:
    """Evolve the triple across an event-free interval of length dt.

    The caller (the event engine) guarantees no event falls strictly inside
    (0, dt); stepping past one shows up as a negative s or r and raises.
    """
    if dt < 0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    s = state.s - dt
    if s < -EPS_TIME:
        raise EventSkipped(f"release passed inside dt: s={state.s}, dt={dt}")
    s = max(s, 0.0)
    if executing:
        r = state.r - dt
        if r < -EPS_TIME:
            raise EventSkipped(f"completion passed inside dt: r={state.r}, dt={dt}")
        cur = state.phase
        return replace(state, s=s, r=max(r, 0.0), o=state.o + dt,
                       phase=PhaseCursor(cur.index, cur.consumed + dt))
    # Idle: r holds; o keeps aging only while work is outstanding.
    o = state.o + (dt if state.r > EPS_TIME else 0.0)
    return replace(state, s=s, o=o)


def settle_phase(state: LoadState, params: EffectiveParams) -> tuple[LoadState, str | None]:
    """Roll the cursor over a phase boundary reached by the last advance.

    Returns the possibly-updated state plus "phase_change" or "completion"
    when a boundary was crossed, else None.  r is recomputed exactly from
    the remaining durations so boundaries do not accumulate float drift.
    """
    cur = state.phase
    durations = params.durations
    if cur.index >= len(durations):
        return state, None
    if cur.consumed < durations[cur.index] - EPS_TIME:
        return state, None
    nxt = cur.index + 1
    remaining = math.fsum(durations[nxt:])
    settled = replace(state, r=remaining, phase=PhaseCursor(nxt, 0.0))
    return settled, ("completion" if nxt == len(durations) else "phase_change")


def deadline_pressed(state: LoadState, params: EffectiveParams) -> bool:
    """True once the instance can only meet its deadline by running non-stop."""
    return state.r > EPS_TIME and state.o + state.r >= params.D - EPS_TIME


def non_deferrable(vector: SmaVector,
                   params: Mapping[int, EffectiveParams]) -> set[int]:
    """Loads that must execute at this instant.

    Either the deadline leaves no slack (o + r has reached D), or a
    non-preemptive phase is mid-run.  Preemption is judged per phase: a
    paused preemptive phase does not pin its siblings.  `params` must carry
    the *_current fields of each load's live phase.
    """
    out: set[int] = set()
    for lid, p in params.items():
        st = vector.states[lid]
        if deadline_pressed(st, p):
            out.add(lid)
        elif (not p.F_current) and st.r > EPS_TIME and st.phase.consumed > EPS_TIME:
            out.add(lid)
    return out


def time_to_next_state_event(state: LoadState, params: EffectiveParams,
                             executing: bool) -> float:
    """Hours until this load next changes its evolution law, or +inf.

    Candidate horizons: the next release; while executing, the current
    phase boundary and the instance completion; while idle with work
    outstanding, the deadline-pressure onset (o + r reaching D).
    """
    horizons = [state.s]
    if executing:
        cur = state.phase
        if cur.index < len(params.durations):
            horizons.append(params.durations[cur.index] - cur.consumed)
        horizons.append(state.r)
    elif state.r > EPS_TIME:
        horizons.append(params.D - state.o - state.r)
    return min((h for h in horizons if h > EPS_TIME), default=math.inf)
