"""Horizon-level feasibility verdict and deficiency accounting.

The micro-grid can run islanded over the horizon iff, at every instant,
the demand of all non-deferrable loads fits within generation plus battery
headroom.  Checking that over continuous time is exactly what the event
timeline makes tractable: every quantity in the condition is constant
between significant moments, so walking the record segments is exhaustive.
check_feasibility() recomputes the condition segment by segment from the
recorded states, independently of the engine's own deficiency bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass

from .battery import BatteryBank, headroom
from .errors import ScenarioInvalid
from .loads import effective_params, params_at_phase
from .sma_state import SmaVector, non_deferrable
from .timeline import (DeficiencyInterval, Timeline,
                       deficiency_intervals_from_steps)
from .tolerances import EPS_POWER, EPS_TIME
from .trace import StepTrace


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    deficiency_profile: StepTrace         # kW over the horizon
    deficiency_intervals: tuple[DeficiencyInterval, ...]
    first_violation: float | None
    nondefer_demand_profile: StepTrace    # kW of must-run demand


def deficiency_at(nondefer_demand: float, eg: float, battery_headroom: float) -> float:
    """Unmet must-run demand after generation and battery output, in kW."""
    if nondefer_demand < 0 or eg < 0 or battery_headroom < 0:
        raise ValueError("deficiency_at arguments must be >= 0")
    return max(0.0, nondefer_demand - eg - battery_headroom)


def check_feasibility(timeline: Timeline) -> FeasibilityReport:
    """Re-evaluate the islanding condition on every inter-event segment.

    Needs the scenario attached to the timeline: the non-deferrable set is
    rebuilt from each record's load states and the specs, and the headroom
    from the recorded SOC, rather than trusting the engine's own split.
    """
    scenario = timeline.scenario
    if scenario is None:
        raise ScenarioInvalid("timeline carries no scenario; cannot re-derive parameters")
    temp = scenario.temperature
    points: list[tuple[float, float]] = []
    demand_points: list[tuple[float, float]] = []
    first_violation: float | None = None
    for rec in timeline.records:
        params = {}
        for spec in scenario.loads:
            if rec.t < spec.first_release - EPS_TIME:
                continue  # no effective instance yet
            base = effective_params(spec, rec.t, temp)
            params[spec.id] = params_at_phase(spec, base, rec.loads[spec.id].phase.index)
        vector = SmaVector(states=rec.loads, t=rec.t)
        nd = non_deferrable(vector, params)
        demand = sum(params[i].E_current for i in nd)
        hr = headroom(BatteryBank(capacity=scenario.battery.capacity,
                                  max_power=scenario.battery.max_power, soc=rec.soc))
        d = deficiency_at(demand, rec.eg, hr)
        if d > EPS_POWER and first_violation is None:
            first_violation = rec.t
        points.append((rec.t, d))
        demand_points.append((rec.t, demand))
    intervals = deficiency_intervals_from_steps(points)
    return FeasibilityReport(
        feasible=first_violation is None,
        deficiency_profile=StepTrace(tuple(points)),
        deficiency_intervals=intervals,
        first_violation=first_violation,
        nondefer_demand_profile=StepTrace(tuple(demand_points)),
    )
