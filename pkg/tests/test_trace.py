from __future__ import annotations

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from smagrid import (QueryBeforeTraceStart, ScenarioInvalid, StepTrace,
                     read_trace_csv, resample, sum_traces, write_trace_csv)


def test_value_at_holds_between_breakpoints():
    tr = StepTrace(((0.0, 100.0), (6.0, 50.0)))
    assert tr.value_at(3.0) == 100.0


def test_value_at_right_continuous_at_breakpoint():
    tr = StepTrace(((0.0, 100.0), (6.0, 50.0)))
    assert tr.value_at(6.0) == 50.0
    # within tolerance below the breakpoint snaps onto it
    assert tr.value_at(6.0 - 1e-12) == 50.0


def test_constant_trace_everywhere():
    tr = StepTrace(((0.0, 100.0),))
    for t in (0.0, 1.0, 17.5, 1000.0):
        assert tr.value_at(t) == 100.0


def test_query_before_start_raises():
    tr = StepTrace(((0.0, 100.0),))
    with pytest.raises(QueryBeforeTraceStart):
        tr.value_at(-1.0)


def test_next_breakpoint_after():
    tr = StepTrace(((0.0, 100.0), (6.0, 50.0)))
    assert tr.next_breakpoint_after(3.0) == 6.0
    assert tr.next_breakpoint_after(6.0) == math.inf
    assert StepTrace(((0.0, 100.0),)).next_breakpoint_after(0.0) == math.inf


def test_breakpoints_must_ascend():
    with pytest.raises(ScenarioInvalid):
        StepTrace(((0.0, 1.0), (0.0, 2.0)))
    with pytest.raises(ScenarioInvalid):
        StepTrace(())


def test_sum_traces_merges_breakpoints():
    wind = StepTrace(((0.0, 80.0), (6.0, 120.0)))
    fossil = StepTrace(((0.0, 100.0),))
    assert sum_traces(wind, fossil).breakpoints == ((0.0, 180.0), (6.0, 220.0))


def test_sum_with_zero_trace_is_identity():
    a = StepTrace(((0.0, 5.0), (2.0, 7.0)))
    zero = StepTrace(((0.0, 0.0),))
    assert sum_traces(a, zero).breakpoints == a.breakpoints


def test_sum_coincident_breakpoints_stay_strict():
    a = StepTrace(((0.0, 1.0), (2.0, 2.0)))
    b = StepTrace(((0.0, 10.0), (2.0, 20.0)))
    times = [t for t, _ in sum_traces(a, b).breakpoints]
    assert times == [0.0, 2.0]


finite = st.floats(min_value=-1e4, max_value=1e4, allow_nan=False)


@st.composite
def traces(draw):
    times = sorted(draw(st.lists(st.integers(min_value=0, max_value=400),
                                 min_size=1, max_size=8, unique=True)))
    return StepTrace(tuple((t / 4.0, draw(finite)) for t in times))


@given(traces(), traces(), st.floats(min_value=0, max_value=120, allow_nan=False))
def test_sum_is_pointwise(a, b, t):
    t = max(t, a.start, b.start)
    total = sum_traces(a, b)
    assert total.value_at(t) == pytest.approx(a.value_at(t) + b.value_at(t), abs=1e-9)


@given(traces())
def test_csv_round_trip_is_exact(tmp_path_factory, a):
    path = tmp_path_factory.mktemp("traces") / "t.csv"
    write_trace_csv(a, path)
    assert read_trace_csv(path).breakpoints == a.breakpoints


def test_csv_rejects_bad_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("hour,kw\n0,1\n")
    with pytest.raises(ScenarioInvalid, match="header"):
        read_trace_csv(p)


def test_csv_reports_line_numbers(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("time_h,value\n0.0,1.0\nnot_a_number,2.0\n")
    with pytest.raises(ScenarioInvalid, match=":3"):
        read_trace_csv(p)


def test_resample_holds_last_sample():
    tr = resample([0.0, 1.0, 2.0], [5.0, 7.0, 7.0], resolution=0.5)
    assert tr.value_at(0.4) == 5.0
    assert tr.value_at(1.2) == 7.0
    # equal consecutive values collapse
    assert len(tr.breakpoints) == 2
