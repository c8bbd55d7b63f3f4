from __future__ import annotations

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from smagrid import (EventSkipped, LoadKind, LoadSpec, LoadState,
                     NotAtReleaseInstant, Phase, PhaseCursor, SmaVector,
                     advance, effective_params, non_deferrable,
                     reset_on_release, settle_phase, time_to_next_state_event)

RICE_COOKER = LoadSpec(id=1, kind=LoadKind.SIMPLE,
                       phases=(Phase(310.0, 1.0, False),),
                       deadline=10.0, period=24.0, priority=2, first_release=9.0)

DISHWASHER = LoadSpec(
    id=2, kind=LoadKind.PHASED,
    phases=(
        Phase(64.20, 0.25, True),
        Phase(1517.8, 0.54, True),
        Phase(103.8, 0.17, False),
        Phase(8.2, 0.07, True),
        Phase(1872.3, 0.31, False),
        Phase(10.9, 0.86, True),
    ),
    deadline=3.0, period=6.0, priority=1)


def simple_params(C=1.0, E=100.0, D=2.0, T=4.0, preemptive=True, priority=1):
    spec = LoadSpec(id=9, kind=LoadKind.SIMPLE, phases=(Phase(E, C, preemptive),),
                    deadline=D, period=T, priority=priority)
    return effective_params(spec, 0.0)


class TestReset:
    def test_rice_cooker_release(self):
        st_ = reset_on_release(LoadState(s=0.0, r=0.0, o=3.0),
                               effective_params(RICE_COOKER, 9.0))
        assert (st_.s, st_.r, st_.o) == (24.0, 1.0, 0.0)
        assert st_.phase == PhaseCursor(0, 0.0)

    def test_clean_reset_after_completion(self):
        st_ = reset_on_release(LoadState(s=0.0, r=0.0, o=1.0), simple_params())
        assert st_.deadline_missed is False

    def test_dishwasher_release(self):
        st_ = reset_on_release(LoadState(s=0.0, r=0.0, o=0.0),
                               effective_params(DISHWASHER, 0.0))
        assert st_.r == pytest.approx(2.20, abs=1e-12)
        assert st_.phase.index == 0

    def test_not_at_release_raises(self):
        with pytest.raises(NotAtReleaseInstant):
            reset_on_release(LoadState(s=1.0, r=0.0, o=0.0), simple_params())


class TestAdvance:
    def test_executing(self):
        st_ = advance(LoadState(s=2.0, r=0.5, o=0.0), 0.5, executing=True)
        assert (st_.s, st_.r, st_.o) == (1.5, 0.0, 0.5)

    def test_idle_with_work_ages(self):
        st_ = advance(LoadState(s=2.0, r=0.5, o=0.3), 0.2, executing=False)
        assert (st_.s, st_.r, st_.o) == (1.8, 0.5, 0.5)

    def test_idle_complete_is_frozen(self):
        st_ = advance(LoadState(s=2.0, r=0.0, o=0.5), 0.2, executing=False)
        assert (st_.s, st_.r, st_.o) == (1.8, 0.0, 0.5)

    def test_stepping_past_release_raises(self):
        with pytest.raises(EventSkipped):
            advance(LoadState(s=0.1, r=0.0, o=0.0), 0.2, executing=False)

    def test_stepping_past_completion_raises(self):
        with pytest.raises(EventSkipped):
            advance(LoadState(s=2.0, r=0.1, o=0.0), 0.2, executing=True)

    dt = st.floats(min_value=0.0, max_value=0.5, allow_nan=False)

    @given(dt)
    def test_executing_preserves_s_minus_r(self, dt):
        before = LoadState(s=2.0, r=0.6, o=0.1)
        after = advance(before, dt, executing=True)
        assert after.s - after.r == pytest.approx(before.s - before.r, abs=1e-12)

    @given(dt, st.booleans())
    def test_o_never_decreases(self, dt, executing):
        before = LoadState(s=2.0, r=0.6, o=0.1)
        after = advance(before, dt, executing)
        assert after.o >= before.o


class TestSettlePhase:
    def test_phase_boundary_rolls_cursor(self):
        p = effective_params(DISHWASHER, 0.0)
        state = LoadState(s=5.75, r=p.C - 0.25, o=0.25, phase=PhaseCursor(0, 0.25))
        settled, ev = settle_phase(state, p)
        assert ev == "phase_change"
        assert settled.phase == PhaseCursor(1, 0.0)
        assert settled.r == pytest.approx(0.54 + 0.17 + 0.07 + 0.31 + 0.86)

    def test_final_phase_completes(self):
        p = simple_params(C=1.0)
        state = LoadState(s=3.0, r=0.0, o=1.0, phase=PhaseCursor(0, 1.0))
        settled, ev = settle_phase(state, p)
        assert ev == "completion"
        assert settled.r == 0.0
        assert settled.phase.index == 1

    def test_mid_phase_no_event(self):
        p = simple_params(C=1.0)
        state = LoadState(s=3.0, r=0.6, o=0.4, phase=PhaseCursor(0, 0.4))
        assert settle_phase(state, p) == (state, None)


class TestNonDeferrable:
    def test_deadline_pressure(self):
        p = simple_params(C=1.0, D=2.0, T=4.0)
        vec = SmaVector({9: LoadState(s=2.5, r=0.5, o=1.5)}, t=1.5)
        assert non_deferrable(vec, {9: p}) == {9}

    def test_nonpreemptive_not_started_is_deferrable(self):
        p = simple_params(C=1.0, D=2.0, preemptive=False)
        vec = SmaVector({9: LoadState(s=4.0, r=1.0, o=0.0)}, t=0.0)
        assert non_deferrable(vec, {9: p}) == set()

    def test_nonpreemptive_mid_run_is_pinned(self):
        p = simple_params(C=1.0, D=2.0, preemptive=False)
        vec = SmaVector({9: LoadState(s=3.5, r=0.5, o=0.5,
                                      phase=PhaseCursor(0, 0.5))}, t=0.5)
        assert non_deferrable(vec, {9: p}) == {9}

    def test_preemptive_mid_run_is_free(self):
        p = simple_params(C=1.0, D=2.0, preemptive=True)
        vec = SmaVector({9: LoadState(s=3.5, r=0.5, o=0.5,
                                      phase=PhaseCursor(0, 0.5))}, t=0.5)
        assert non_deferrable(vec, {9: p}) == set()

    def test_paused_between_nonpreemptive_phases_is_free(self):
        chain = LoadSpec(
            id=6, kind=LoadKind.COMPOSITE,
            phases=(Phase(50.0, 0.5, False, 6), Phase(120.0, 1.0, False, 7)),
            deadline=6.0, period=6.0)
        base = effective_params(chain, 0.0)
        from smagrid import params_at_phase
        # phase 0 done, phase 1 not started: both non-preemptive, load still free
        vec = SmaVector({6: LoadState(s=5.5, r=1.0, o=0.5,
                                      phase=PhaseCursor(1, 0.0))}, t=0.5)
        assert non_deferrable(vec, {6: params_at_phase(chain, base, 1)}) == set()


class TestTimeToNextStateEvent:
    def test_executing_completion_before_release(self):
        p = simple_params(C=0.5, T=4.0)
        assert time_to_next_state_event(LoadState(s=3.0, r=0.5, o=0.0), p,
                                        executing=True) == 0.5

    def test_idle_deadline_onset(self):
        p = simple_params(C=0.5, D=2.0, T=4.0)
        assert time_to_next_state_event(LoadState(s=3.0, r=0.5, o=1.0), p,
                                        executing=False) == pytest.approx(0.5)

    def test_idle_complete_waits_for_release(self):
        p = simple_params(C=0.5)
        assert time_to_next_state_event(LoadState(s=3.0, r=0.0, o=1.0), p,
                                        executing=False) == 3.0

    def test_phase_boundary_can_precede_completion(self):
        p = effective_params(DISHWASHER, 0.0)
        state = LoadState(s=6.0, r=2.2, o=0.0, phase=PhaseCursor(0, 0.0))
        assert time_to_next_state_event(state, p, executing=True) == 0.25

    def test_nothing_pending_is_infinite(self):
        p = simple_params(C=0.5)
        state = LoadState(s=0.0, r=0.0, o=0.0)
        # s = 0 horizon is filtered (the release is due now, not pending)
        assert time_to_next_state_event(state, p, executing=False) == math.inf
