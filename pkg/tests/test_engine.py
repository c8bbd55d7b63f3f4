from __future__ import annotations

import pytest

from corpus import (CORPUS, ORACLE_DT, composite_eq34, eq32_three_loads,
                    offset_nonaligned, paper_sec6, soc_floor_case,
                    thermostatic_case, zero_load)
from smagrid import (BatteryBank, LoadKind, LoadSpec, NonTermination, Phase,
                     Scenario, ScenarioInvalid, SmaVector, StepTrace, advance,
                     build_op_set, compare_timelines, effective_params,
                     headroom, non_deferrable, params_at_phase, run,
                     run_fixed_step, significant_moments)

EPS = 1e-9


def live_params_at(scenario, states, t):
    """Per-load effective params at time t, pointed at each live phase."""
    params = {}
    for spec in scenario.loads:
        if t < spec.first_release - EPS:
            continue
        base = effective_params(spec, t, scenario.temperature)
        params[spec.id] = params_at_phase(spec, base, states[spec.id].phase.index)
    return params


@pytest.fixture(scope="module")
def eq32_timeline():
    return run(eq32_three_loads())


@pytest.fixture(scope="module")
def warm_overrun_timeline():
    spec = LoadSpec(id=1, kind=LoadKind.SIMPLE, phases=(Phase(50.0, 1.0, True),),
                    deadline=1.0, period=4.0, priority=1, first_release=-3.5)
    sc = Scenario(loads=(spec,), battery=BatteryBank(180.0, 90.0, 1.0),
                  generation=StepTrace(((0.0, 100.0),)), horizon=(0.0, 8.0))
    return run(sc)


@pytest.fixture(scope="module")
def composite_timeline():
    return run(composite_eq34())


@pytest.fixture(scope="module")
def paper_timeline():
    return run(paper_sec6())


class TestEq32HandTrace:
    """Spot checks against the hand-executed schedule of the three-load case."""

    def test_op_set_sequence(self, eq32_timeline):
        by_t = {rec.t: rec for rec in eq32_timeline.records}
        assert by_t[0.0].op_set == {1, 2}
        assert by_t[0.5].op_set == {3}
        assert by_t[2.0].op_set == {1}
        assert by_t[3.0].op_set == {2}

    def test_all_instances_meet_deadlines(self, eq32_timeline):
        assert eq32_timeline.summary.feasible
        assert eq32_timeline.summary.deadline_misses == ()

    def test_completions(self, eq32_timeline):
        got = [(c.load_id, c.instance, c.t) for c in eq32_timeline.completions]
        assert got == [(1, 0, 0.5), (2, 0, 0.5), (3, 0, 1.5),
                       (1, 1, 2.5), (2, 1, 3.5)]

    def test_significant_moments(self, eq32_timeline):
        moments = significant_moments(eq32_timeline)
        for expected in [(0.0, "release"), (0.0, "horizon"), (0.5, "completion"),
                         (1.5, "completion"), (2.0, "release"), (3.0, "release"),
                         (4.0, "horizon")]:
            assert expected in moments

    def test_records_strictly_ascending(self, eq32_timeline):
        times = [rec.t for rec in eq32_timeline.records]
        assert times == sorted(set(times))


class TestZeroLoad:
    def test_single_segment(self):
        tl = run(zero_load())
        assert len(tl.records) == 2
        assert [rec.event_kind for rec in tl.records] == ["horizon", "horizon"]
        assert tl.summary.feasible
        assert all(rec.soc == 1.0 for rec in tl.records)

    def test_moments(self):
        tl = run(zero_load())
        assert significant_moments(tl) == [(0.0, "horizon"), (24.0, "horizon")]


class TestSingleLoadMoments:
    def test_release_and_completion_schedule(self):
        spec = LoadSpec(id=1, kind=LoadKind.SIMPLE, phases=(Phase(50.0, 0.5, True),),
                        deadline=2.0, period=2.0, priority=1)
        sc = Scenario(loads=(spec,), battery=BatteryBank(180.0, 90.0, 1.0),
                      generation=StepTrace(((0.0, 100.0),)), horizon=(0.0, 4.0))
        moments = significant_moments(run(sc))
        for expected in [(0.0, "release"), (0.5, "completion"),
                         (2.0, "release"), (2.5, "completion")]:
            assert expected in moments

    def test_trace_breakpoint_tagged(self):
        sc = Scenario(loads=(), battery=BatteryBank(180.0, 90.0, 1.0),
                      generation=StepTrace(((0.0, 100.0), (6.0, 50.0))),
                      horizon=(0.0, 10.0))
        assert (6.0, "trace_breakpoint") in significant_moments(run(sc))


class TestSocFloor:
    def test_floor_event_and_headroom_collapse(self):
        tl = run(soc_floor_case())
        floor_recs = [rec for rec in tl.records if "soc_floor" in rec.events]
        assert len(floor_recs) == 1
        rec = floor_recs[0]
        assert rec.t == pytest.approx(0.6, abs=1e-6)
        assert rec.soc == pytest.approx(0.2, abs=1e-9)
        bank = tl.scenario.battery
        assert headroom(BatteryBank(bank.capacity, bank.max_power, rec.soc)) == 0.0
        assert rec.deficiency == pytest.approx(90.0, abs=1e-9)


class TestThermostatic:
    def test_work_follows_temperature(self):
        tl = run(thermostatic_case())
        got = {(c.instance, round(c.t, 6)) for c in tl.completions}
        # C = 0.2, 0.2, 0, 0, 0.1, 0.1 per instance; zero-work instances
        # complete the moment they release
        assert got == {(0, 0.2), (1, 2.2), (2, 4.0), (3, 6.0), (4, 8.1), (5, 10.1)}

    def test_zero_work_instance_never_schedules(self):
        tl = run(thermostatic_case())
        recs = [rec for rec in tl.records if rec.t == 4.0]
        assert recs and recs[0].op_set == frozenset()
        assert "completion" in recs[0].events and "release" in recs[0].events


class TestWarmStartAndOverrun:

    def test_backlogged_instance_misses_immediately(self, warm_overrun_timeline):
        misses = warm_overrun_timeline.summary.deadline_misses
        assert [(m.load_id, m.instance, m.t) for m in misses] == [(1, 0, 0.0)]
        assert not warm_overrun_timeline.summary.feasible

    def test_overrun_logged_at_next_release(self, warm_overrun_timeline):
        assert (0.5, "overrun") in significant_moments(warm_overrun_timeline)

    def test_swept_instance_never_completes(self, warm_overrun_timeline):
        got = [(c.load_id, c.instance, c.t) for c in warm_overrun_timeline.completions]
        assert got == [(1, 1, 1.5), (1, 2, 5.5)]

    def test_fixed_step_matches(self, warm_overrun_timeline):
        st = run_fixed_step(warm_overrun_timeline.scenario, ORACLE_DT)
        cmp_ = compare_timelines(warm_overrun_timeline, st, ORACLE_DT)
        assert cmp_.completion_sets_match
        assert cmp_.max_completion_dt <= 2 * ORACLE_DT
        misses = [(m.load_id, m.instance) for m in st.summary.deadline_misses]
        assert misses == [(1, 0)]


class TestCompositeChain:

    def test_deadline_pressure_carries_the_chain(self, composite_timeline):
        # the 120 kW phase is rejected until pressure onsets at o = 2.5;
        # from there the chain runs pinned to o + r = D, finishing exactly
        # at the deadline
        assert (2.5, "deadline_onset") in significant_moments(composite_timeline)
        got = [(c.instance, c.t) for c in composite_timeline.completions]
        assert got == [(0, 6.0)]

    def test_deficiency_from_pressured_phases(self, composite_timeline):
        ivs = composite_timeline.summary.deficiency_intervals
        assert [(iv.start, iv.end, iv.peak, iv.energy) for iv in ivs] == [
            (2.5, 3.5, 20.0, 20.0), (4.0, 5.5, 40.0, 60.0)]
        assert not composite_timeline.summary.feasible
        assert composite_timeline.summary.deadline_misses == ()

    def test_phase_changes_tagged(self, composite_timeline):
        kinds = {k for _, k in significant_moments(composite_timeline)}
        assert "phase_change" in kinds


class TestPaperScenario:

    def test_battery_charges_exactly_on_surplus(self, paper_timeline):
        for rec in paper_timeline.records[:-1]:
            net = rec.eg - rec.demand
            if rec.battery_power > EPS:
                assert net > 0
            if net < -EPS and rec.soc > 0.2 + EPS:
                assert rec.battery_power < 0

    def test_power_balance_every_record(self, paper_timeline):
        for rec in paper_timeline.records:
            discharge = max(0.0, -rec.battery_power)
            assert discharge + rec.deficiency == pytest.approx(
                max(0.0, rec.demand - rec.eg), abs=1e-9)

    def test_no_hidden_events_inside_segments(self, paper_timeline):
        # evaluate the event predicates strictly inside each segment: the
        # non-deferrable set must be constant on the open interval, and
        # rebuilding the admission there must reproduce the recorded op_set
        sc = paper_timeline.scenario

        def probe(rec, offset):
            t = rec.t + offset
            states = {lid: advance(s, offset, lid in rec.op_set)
                      for lid, s in rec.loads.items()}
            params = live_params_at(sc, states, t)
            vec = SmaVector(states, t)
            soc = min(max(rec.soc + rec.battery_power * offset
                          / sc.battery.capacity, 0.2), 1.0)
            bank = BatteryBank(sc.battery.capacity, sc.battery.max_power, soc)
            return vec, params, bank

        for rec, nxt in zip(paper_timeline.records, paper_timeline.records[1:]):
            width = nxt.t - rec.t
            if width <= 1e-6:
                continue
            vec_q, params_q, bank_q = probe(rec, width / 4)
            vec_h, params_h, bank_h = probe(rec, width / 2)
            assert sc.generation.value_at(rec.t + width / 2) == rec.eg
            assert non_deferrable(vec_q, params_q) == non_deferrable(vec_h, params_h)
            for vec, params, bank in ((vec_q, params_q, bank_q),
                                      (vec_h, params_h, bank_h)):
                rebuilt = build_op_set(vec, params, rec.eg, headroom(bank))
                assert rebuilt.op_set == rec.op_set


class TestOracleEquivalenceSpot:
    def test_eq32_op_sets_match_at_all_oracle_steps(self):
        sc = eq32_three_loads()
        exact = run(sc)
        stepped = run_fixed_step(sc, ORACLE_DT)
        recs = exact.records
        idx = 0
        for srec in stepped.records:
            while idx + 1 < len(recs) and recs[idx + 1].t <= srec.t + EPS:
                idx += 1
            assert srec.op_set == recs[idx].op_set, f"op mismatch at t={srec.t}"

    def test_convergence_on_nonaligned_scenario(self):
        sc = offset_nonaligned()
        exact = run(sc)
        for dt in (8e-3, 4e-3, 2e-3, 1e-3):
            cmp_ = compare_timelines(exact, run_fixed_step(sc, dt), dt)
            assert cmp_.completion_sets_match
            assert cmp_.max_completion_dt <= 2 * dt


class TestGuards:
    def test_event_cap_trips(self):
        with pytest.raises(NonTermination):
            run(paper_sec6(), event_cap=5)

    def test_fixed_step_rejects_bad_dt(self):
        with pytest.raises(ScenarioInvalid):
            run_fixed_step(zero_load(), 0.0)


def instance_of(tl, rec, lid):
    spec = next(s for s in tl.scenario.loads if s.id == lid)
    st = rec.loads[lid]
    release = rec.t + st.s - spec.period
    return round((release - spec.first_release) / spec.period)


class TestCorpusWideInvariants:
    def test_admission_is_internally_consistent(self, corpus_timelines):
        for name, scenario, tl in corpus_timelines:
            times = [rec.t for rec in tl.records]
            assert times == sorted(times), name
            for rec in tl.records:
                assert rec.admission is not None
                assert rec.op_set == rec.admission.op_set
                assert not rec.op_set & {r.load_id for r in rec.admission.rejected}

    def test_soc_path_slope_bounded(self, corpus_timelines):
        for name, scenario, tl in corpus_timelines:
            cap = scenario.battery.capacity
            for rec, nxt in zip(tl.records, tl.records[1:]):
                dsoc = abs(nxt.soc - rec.soc)
                width = nxt.t - rec.t
                assert dsoc <= scenario.battery.max_power / cap * width + 1e-9, name

    def test_s_minus_r_constant_on_executing_segments(self, corpus_timelines):
        for name, scenario, tl in corpus_timelines:
            for rec, nxt in zip(tl.records, tl.records[1:]):
                for lid in rec.op_set:
                    before = rec.loads[lid]
                    after = nxt.loads[lid]
                    if after.r > before.r or after.s > before.s:
                        continue  # reset at the segment end
                    assert after.s - after.r == pytest.approx(
                        before.s - before.r, abs=1e-9), (name, lid, rec.t)

    def test_completed_work_equals_budget(self, corpus_timelines):
        for name, scenario, tl in corpus_timelines:
            executed: dict[tuple[int, int], float] = {}
            for rec, nxt in zip(tl.records, tl.records[1:]):
                for lid in rec.op_set:
                    key = (lid, instance_of(tl, rec, lid))
                    executed[key] = executed.get(key, 0.0) + (nxt.t - rec.t)
            checked = 0
            for c in tl.completions:
                spec = next(s for s in scenario.loads if s.id == c.load_id)
                a = spec.first_release + c.instance * spec.period
                if a < scenario.horizon[0] - EPS:
                    continue  # warm-start backlog carries no execution history
                budget = effective_params(spec, a, scenario.temperature).C
                if budget <= EPS:
                    continue  # zero-work instance
                ran = executed.get((c.load_id, c.instance), 0.0)
                assert ran == pytest.approx(budget, abs=1e-6), (name, c)
                checked += 1
            if tl.completions:
                assert checked > 0 or all(
                    effective_params(s, s.first_release, scenario.temperature).C <= EPS
                    for s in scenario.loads), name
