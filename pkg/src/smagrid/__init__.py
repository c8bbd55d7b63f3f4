"""smagrid: event-driven simulation of priority-based real-time energy
management in islanded micro-grids.

The engine schedules heterogeneous electric loads against time-varying
on-site generation and a battery bank, decides whether the grid can run
islanded over a horizon, and quantifies when and by how much power falls
short.
"""

from .battery import BatteryBank, PowerSplit, headroom, integrate_soc, power_split, time_to_soc_event
from .engine import (DEFAULT_EVENT_CAP, OracleComparison, compare_timelines,
                     run, run_fixed_step, significant_moments)
from .errors import (BoundaryCrossed, EventSkipped, InvalidThermalParams,
                     NonTermination, NotAtReleaseInstant,
                     QueryBeforeFirstRelease, QueryBeforeTraceStart,
                     ScenarioInvalid, SmaGridError)
from .feasibility import FeasibilityReport, check_feasibility, deficiency_at
from .loads import (EffectiveParams, LoadKind, LoadSpec, Phase, ThermoParams,
                    effective_params, instance_durations, params_at_phase,
                    release_times, thermo_duty_cycle, thermo_operation_time)
from .scenario import Scenario, load_scenario
from .scheduler import AdmissionResult, Rejection, build_op_set
from .sma_state import (LoadState, PhaseCursor, SmaVector, advance,
                        deadline_pressed, non_deferrable, reset_on_release,
                        settle_phase, time_to_next_state_event)
from .timeline import (Completion, DeadlineMiss, DeficiencyInterval, Timeline,
                       TimelineRecord, TimelineSummary, read_timeline_csv,
                       summarize, timeline_to_json_dict, write_timeline_csv,
                       write_timeline_json)
from .trace import StepTrace, read_trace_csv, resample, sum_traces, write_trace_csv

__version__ = "0.1.0"
