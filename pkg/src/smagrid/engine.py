"""The significant-moment event loop and the fixed-step reference engine.

The event engine advances the whole system exactly from one significant
moment to the next.  A significant moment is any instant where some
quantity's evolution law changes: an instance release, a phase boundary, an
instance completion, a deadline-pressure onset, an SOC floor or ceiling
crossing, a generation-trace breakpoint, or a horizon end.  Between two
such moments every admission input is constant, so the executing set cannot
flip mid-interval and the produced timeline carries no discretisation
error for step traces.

run_fixed_step() forward-steps the same laws on a uniform grid.  Its
stepping code is deliberately written separately from the event loop so the
two engines can cross-check each other: completion times converge at
O(dt), deficiency energy and final SOC converge with the step size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .battery import BatteryBank, headroom, integrate_soc, power_split, time_to_soc_event
from .errors import NonTermination, ScenarioInvalid
from .loads import (EffectiveParams, LoadSpec, effective_instance_index,
                    effective_params, params_at_phase)
from .scenario import Scenario
from .scheduler import AdmissionResult, build_op_set
from .sma_state import (LoadState, PhaseCursor, SmaVector, advance,
                        deadline_pressed, non_deferrable, reset_on_release,
                        settle_phase, time_to_next_state_event)
from .timeline import (Completion, DeadlineMiss, Timeline, TimelineRecord,
                       summarize)
from .tolerances import EPS_POWER, EPS_SOC, EPS_TIME, SOC_CEILING, SOC_FLOOR

DEFAULT_EVENT_CAP = 10_000_000

# Same-instant ordering; also the precedence for a record's primary tag.
EVENT_PRECEDENCE = ("overrun", "release", "completion", "phase_change",
                    "deadline_onset", "soc_floor", "soc_ceiling",
                    "trace_breakpoint", "horizon")


def _order_kinds(kinds: set[str]) -> tuple[str, ...]:
    return tuple(k for k in EVENT_PRECEDENCE if k in kinds)


@dataclass
class _LoadTracker:
    """Engine-side bookkeeping for one load (beyond the SMA triple)."""

    spec: LoadSpec
    state: LoadState
    params: EffectiveParams | None  # frozen at release; None before the first
    instance: int                   # index of the effective instance
    pressed: bool = False           # deadline-pressure edge detector


def _init_tracker(spec: LoadSpec, t_a: float, temperature) -> _LoadTracker:
    """State at the horizon start.

    Loads releasing at or after t_a simply wait for their release.  Loads
    whose schedule started earlier enter with a fresh instance of the
    latest release at or before t_a, full remaining work, and an o that
    already reflects the elapsed wait (worst-case backlog, no execution
    history assumed).
    """
    if spec.first_release >= t_a - EPS_TIME:
        state = LoadState(s=spec.first_release - t_a, r=0.0, o=0.0)
        return _LoadTracker(spec=spec, state=state, params=None, instance=-1)
    k = effective_instance_index(spec, t_a)
    p = effective_params(spec, t_a, temperature)
    work = p.C if p.C > EPS_TIME else 0.0
    state = LoadState(s=p.release + p.T - t_a, r=work, o=t_a - p.release)
    return _LoadTracker(spec=spec, state=state, params=p, instance=k)


def run(scenario: Scenario, event_cap: int = DEFAULT_EVENT_CAP) -> Timeline:
    """Simulate the scenario exactly from significant moment to significant moment.

    At each moment, in order: phase boundaries and completions from the
    segment that just ended are settled, due releases are applied (an
    unfinished instance swept away by its own next release is logged as an
    overrun), deadline pressure is re-marked, then the executing set is
    rebuilt and the battery split decides deficiency.  One record is
    emitted per moment.  The step to the next moment is the minimum over
    every load's state horizon, the SOC boundary crossing, the next
    generation breakpoint, and the horizon end.
    """
    t_a, t_b = scenario.horizon
    gen = scenario.generation
    temp = scenario.temperature
    bank = scenario.battery

    trackers = {spec.id: _init_tracker(spec, t_a, temp) for spec in scenario.loads}
    completions: list[Completion] = []
    misses: list[DeadlineMiss] = []
    records: list[TimelineRecord] = []

    t = t_a
    last_power = 0.0
    events = 0
    while True:
        events += 1
        if events > event_cap:
            raise NonTermination(f"event cap {event_cap} exceeded at t={t}")
        kinds: set[str] = set()

        # Phase boundaries / completions reached by the segment that just ended
        # (also settles zero-work instances present at the horizon start).
        for lid, trk in trackers.items():
            if trk.params is None:
                continue
            settled, ev = settle_phase(trk.state, trk.params)
            if ev:
                trk.state = settled
                kinds.add(ev)
                if ev == "completion":
                    completions.append(Completion(lid, trk.instance, t))

        # Releases due now.
        for lid, trk in trackers.items():
            if trk.state.s > EPS_TIME:
                continue
            p = effective_params(trk.spec, t, temp)
            if trk.state.r > EPS_TIME:
                kinds.add("overrun")
                if not trk.state.deadline_missed:
                    misses.append(DeadlineMiss(lid, trk.instance, t))
            trk.state = reset_on_release(trk.state, p)
            trk.params = p
            trk.instance += 1
            trk.pressed = False
            kinds.add("release")
            # Zero-work instances finish the moment they arrive and never
            # enter the scheduling pool.
            settled, ev = settle_phase(trk.state, trk.params)
            if ev == "completion":
                trk.state = settled
                kinds.add(ev)
                completions.append(Completion(lid, trk.instance, t))

        # Deadline-pressure onsets and misses.
        for lid, trk in trackers.items():
            if trk.params is None:
                continue
            pressed = deadline_pressed(trk.state, trk.params)
            if pressed and not trk.pressed:
                kinds.add("deadline_onset")
            trk.pressed = pressed
            st = trk.state
            if (st.r > EPS_TIME and st.o + st.r > trk.params.D + EPS_TIME
                    and not st.deadline_missed):
                trk.state = replace(st, deadline_missed=True)
                misses.append(DeadlineMiss(lid, trk.instance, t))

        # Battery and trace arrivals.
        if records:
            if last_power < -EPS_POWER and bank.soc <= SOC_FLOOR + EPS_SOC:
                kinds.add("soc_floor")
            if last_power > EPS_POWER and bank.soc >= SOC_CEILING - EPS_SOC:
                kinds.add("soc_ceiling")
            if gen.has_breakpoint_at(t):
                kinds.add("trace_breakpoint")
        if abs(t - t_a) <= EPS_TIME or abs(t - t_b) <= EPS_TIME:
            kinds.add("horizon")

        # Rebuild the executing set and split the power balance.
        live_params = {lid: params_at_phase(trk.spec, trk.params, trk.state.phase.index)
                       for lid, trk in trackers.items() if trk.params is not None}
        vector = SmaVector(states={lid: trk.state for lid, trk in trackers.items()}, t=t)
        eg = gen.value_at(t)
        admission = build_op_set(vector, live_params, eg, headroom(bank))
        split = power_split(bank, eg, admission.total_demand)

        ordered = _order_kinds(kinds)
        records.append(TimelineRecord(
            t=t, event_kind=ordered[0], events=ordered, op_set=admission.op_set,
            loads=dict(vector.states), eg=eg, demand=admission.total_demand,
            battery_power=split.battery_power, soc=bank.soc,
            deficiency=split.deficiency, admission=admission))

        if t >= t_b - EPS_TIME:
            break

        # Next significant moment: minimum over all horizons, as absolute
        # times so anchored events (breakpoints, horizon end) stay exact.
        t_next = t_b
        nb = gen.next_breakpoint_after(t)
        if nb < t_next:
            t_next = nb
        for lid, trk in trackers.items():
            if trk.params is None:
                h = trk.state.s  # only the first release is pending
            else:
                h = time_to_next_state_event(trk.state, trk.params,
                                             lid in admission.op_set)
            if t + h < t_next:
                t_next = t + h
        se = time_to_soc_event(bank, split.battery_power)
        if math.isfinite(se) and t + se < t_next:
            t_next = t + se
        dt = t_next - t
        if dt <= 0:
            raise NonTermination(f"no forward progress at t={t}")

        for lid, trk in trackers.items():
            trk.state = advance(trk.state, dt, lid in admission.op_set)
        bank = integrate_soc(bank, split.battery_power, dt)
        last_power = split.battery_power
        t = min(t_next, t_b)

    return Timeline(records=tuple(records), summary=summarize(records, misses),
                    completions=tuple(completions), scenario=scenario)


def run_fixed_step(scenario: Scenario, dt: float,
                   event_cap: int = DEFAULT_EVENT_CAP) -> Timeline:
    """Forward-step the scenario on a uniform grid of width dt.

    Releases fire at the top of the step that contains them (tracked on an
    absolute schedule so the offset never accumulates); state updates are
    plain Euler steps; the SOC clamps silently at its window instead of
    event-splitting.  Emits one record per step.
    """
    if dt <= 0:
        raise ScenarioInvalid(f"fixed-step dt must be positive, got {dt}")
    t_a, t_b = scenario.horizon
    gen = scenario.generation
    temp = scenario.temperature
    bank = scenario.battery

    n_steps = math.ceil((t_b - t_a) / dt - EPS_TIME)
    if n_steps + 1 > event_cap:
        raise NonTermination(f"step count {n_steps} exceeds cap {event_cap}")

    states: dict[int, LoadState] = {}
    params: dict[int, EffectiveParams | None] = {}
    instance: dict[int, int] = {}
    next_release: dict[int, float] = {}
    missed: dict[int, bool] = {}
    specs = {spec.id: spec for spec in scenario.loads}

    completions: list[Completion] = []
    misses: list[DeadlineMiss] = []
    records: list[TimelineRecord] = []

    for spec in scenario.loads:
        lid = spec.id
        missed[lid] = False
        if spec.first_release >= t_a - EPS_TIME:
            states[lid] = LoadState(s=spec.first_release - t_a, r=0.0, o=0.0)
            params[lid] = None
            instance[lid] = -1
            next_release[lid] = spec.first_release
        else:
            k = effective_instance_index(spec, t_a)
            p = effective_params(spec, t_a, temp)
            work = p.C if p.C > EPS_TIME else 0.0
            states[lid] = LoadState(s=p.release + p.T - t_a, r=work, o=t_a - p.release)
            params[lid] = p
            instance[lid] = k
            next_release[lid] = p.release + p.T
            if work <= 0.0:
                states[lid] = replace(states[lid], phase=PhaseCursor(len(p.durations), 0.0))
                completions.append(Completion(lid, k, t_a))

    for k_step in range(n_steps + 1):
        t = min(t_a + k_step * dt, t_b)
        final = k_step == n_steps
        step = min(dt, t_b - t)

        # Releases that fall inside this step fire at its top; the schedule
        # is absolute, so the early-fire offset stays below one step.
        for lid, spec in specs.items():
            window = t + EPS_TIME if final else t + step - EPS_TIME
            while next_release[lid] <= window:
                a = next_release[lid]
                p = effective_params(spec, a, temp)
                st = states[lid]
                if st.r > EPS_TIME and not missed[lid]:
                    misses.append(DeadlineMiss(lid, instance[lid], t))
                work = p.C if p.C > EPS_TIME else 0.0
                instance[lid] += 1
                missed[lid] = False
                states[lid] = LoadState(s=a + spec.period - t, r=work,
                                        o=max(0.0, t - a))
                params[lid] = p
                next_release[lid] = a + spec.period
                if work <= 0.0:
                    states[lid] = replace(states[lid],
                                          phase=PhaseCursor(len(p.durations), 0.0))
                    completions.append(Completion(lid, instance[lid], t))

        # Deadline misses.
        for lid, p in params.items():
            if p is None:
                continue
            st = states[lid]
            if st.r > EPS_TIME and st.o + st.r > p.D + EPS_TIME and not missed[lid]:
                missed[lid] = True
                misses.append(DeadlineMiss(lid, instance[lid], t))
                states[lid] = replace(st, deadline_missed=True)

        live_params = {lid: params_at_phase(specs[lid], p, states[lid].phase.index)
                       for lid, p in params.items() if p is not None}
        vector = SmaVector(states=dict(states), t=t)
        eg = gen.value_at(t)
        admission = build_op_set(vector, live_params, eg, headroom(bank))
        split = power_split(bank, eg, admission.total_demand)
        records.append(TimelineRecord(
            t=t, event_kind="step", events=("step",), op_set=admission.op_set,
            loads=dict(states), eg=eg, demand=admission.total_demand,
            battery_power=split.battery_power, soc=bank.soc,
            deficiency=split.deficiency, admission=admission))
        if final:
            break

        # Euler update of every load and the SOC.
        for lid, st in states.items():
            p = params[lid]
            executing = lid in admission.op_set
            s = max(st.s - step, 0.0)
            if executing and p is not None:
                consumed = st.phase.consumed + step
                r = max(st.r - step, 0.0)
                o = st.o + step
                idx = st.phase.index
                if idx < len(p.durations) and consumed >= p.durations[idx] - EPS_TIME:
                    idx += 1
                    consumed = 0.0
                    r = math.fsum(p.durations[idx:])
                    if idx == len(p.durations):
                        completions.append(Completion(lid, instance[lid], t + step))
                states[lid] = replace(st, s=s, r=r, o=o,
                                      phase=PhaseCursor(idx, consumed))
            else:
                o = st.o + (step if st.r > EPS_TIME else 0.0)
                states[lid] = replace(st, s=s, o=o)
        raw = bank.soc + split.battery_power * step / bank.capacity
        bank = replace(bank, soc=min(max(raw, SOC_FLOOR), SOC_CEILING))

    return Timeline(records=tuple(records), summary=summarize(records, misses),
                    completions=tuple(completions), scenario=scenario)


def significant_moments(timeline: Timeline) -> list[tuple[float, str]]:
    """Project a timeline onto (time, event kind) pairs, deduplicated."""
    seen: dict[tuple[float, str], None] = {}
    for rec in timeline.records:
        for kind in rec.events:
            seen.setdefault((rec.t, kind))
    return list(seen)


@dataclass(frozen=True)
class OracleComparison:
    """Deviation metrics between the event engine and the fixed-step engine."""

    completion_sets_match: bool
    completion_order_violations: int
    max_completion_dt: float
    deficiency_energy_exact: float
    deficiency_energy_stepped: float
    final_soc_exact: float
    final_soc_stepped: float

    @property
    def deficiency_energy_delta(self) -> float:
        return abs(self.deficiency_energy_exact - self.deficiency_energy_stepped)

    @property
    def final_soc_delta(self) -> float:
        return abs(self.final_soc_exact - self.final_soc_stepped)


def compare_timelines(exact: Timeline, stepped: Timeline, dt: float) -> OracleComparison:
    """Measure how far the fixed-step run strays from the exact one.

    Completion order is compared pairwise; two completions closer than 2*dt
    in the exact timeline count as simultaneous and impose no order.
    """
    by_key_exact = {(c.load_id, c.instance): c.t for c in exact.completions}
    by_key_step = {(c.load_id, c.instance): c.t for c in stepped.completions}
    sets_match = set(by_key_exact) == set(by_key_step)
    max_dev = 0.0
    if sets_match and by_key_exact:
        max_dev = max(abs(by_key_exact[k] - by_key_step[k]) for k in by_key_exact)
    violations = 0
    if sets_match:
        order_exact = sorted(by_key_exact, key=lambda k: (by_key_exact[k], k))
        pos_step = {k: i for i, k in enumerate(
            sorted(by_key_step, key=lambda k: (by_key_step[k], k)))}
        for i, a in enumerate(order_exact):
            for b in order_exact[i + 1:]:
                gap = by_key_exact[b] - by_key_exact[a]
                if gap > 2 * dt + EPS_TIME and pos_step[a] > pos_step[b]:
                    violations += 1
    return OracleComparison(
        completion_sets_match=sets_match,
        completion_order_violations=violations,
        max_completion_dt=max_dev,
        deficiency_energy_exact=math.fsum(
            iv.energy for iv in exact.summary.deficiency_intervals),
        deficiency_energy_stepped=math.fsum(
            iv.energy for iv in stepped.summary.deficiency_intervals),
        final_soc_exact=exact.records[-1].soc,
        final_soc_stepped=stepped.records[-1].soc,
    )
