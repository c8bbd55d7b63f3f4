"""Electric load models and per-instance parameter resolution.

Four load kinds are supported:

* simple      -- one phase, fixed power and duration
* phased      -- ordered phases with per-phase power and preemption flags
* composite   -- a precedence-constrained group modelled as phases, each
                 phase carrying its own priority
* thermostatic -- one phase whose duration is derived from the outside
                 temperature at each instance release (duty-cycle model)

A load issues an instance every `period` hours starting at `first_release`;
the instance released at `a` is effective on [a, a + period).  All powers
are kW, times are hours; scenario files may declare watt inputs and are
normalised by the loader.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

from .errors import InvalidThermalParams, QueryBeforeFirstRelease, ScenarioInvalid
from .tolerances import EPS_TIME
from .trace import StepTrace


class LoadKind(Enum):
    SIMPLE = "simple"
    PHASED = "phased"
    COMPOSITE = "composite"
    THERMOSTATIC = "thermostatic"


@dataclass(frozen=True)
class Phase:
    """One operation phase: fixed power draw over a fixed duration.

    `preemptive=False` means the phase must run to completion once started.
    `priority` is set per phase for composite loads only (smaller value =
    higher priority).  Thermostatic loads leave `duration` as None; it is
    derived at each release.
    """

    power: float
    duration: float | None
    preemptive: bool
    priority: int | None = None

    def __post_init__(self) -> None:
        if self.power < 0:
            raise ScenarioInvalid(f"phase power must be >= 0, got {self.power}")
        if self.duration is not None and self.duration <= 0:
            raise ScenarioInvalid(f"phase duration must be > 0, got {self.duration}")


@dataclass(frozen=True)
class ThermoParams:
    """Thermal-balance coefficients for a thermostatic load.

    g_out: conductance between house and outside, kW per degF
    c_h:   thermal capacitance of the house (cancels out of the duty cycle;
           carried so scenarios stay self-describing)
    n_ac:  coefficient of performance
    p_ac:  compressor power, kW
    x_stable: indoor setpoint the duty cycle holds, degF
    """

    g_out: float
    c_h: float
    n_ac: float
    p_ac: float
    x_stable: float

    def __post_init__(self) -> None:
        if self.p_ac <= 0 or self.n_ac <= 0:
            raise InvalidThermalParams(
                f"p_ac and n_ac must be positive, got p_ac={self.p_ac}, n_ac={self.n_ac}"
            )
        if self.g_out < 0:
            raise ScenarioInvalid(f"g_out must be >= 0, got {self.g_out}")
        if self.c_h <= 0:
            raise ScenarioInvalid(f"c_h must be positive, got {self.c_h}")


@dataclass(frozen=True)
class LoadSpec:
    """Static description of one electric load.

    `priority` is the grid-wide ordinal for non-composite kinds; composite
    loads carry one priority per phase instead.  `deadline` is relative to
    each release; `period` separates consecutive releases.
    """

    id: int
    kind: LoadKind
    phases: tuple[Phase, ...]
    deadline: float
    period: float
    priority: int | None = None
    first_release: float = 0.0
    thermo: ThermoParams | None = None

    def __post_init__(self) -> None:
        if self.id < 0:
            raise ScenarioInvalid(f"load id must be >= 0, got {self.id}")
        if not self.phases:
            raise ScenarioInvalid(f"load {self.id}: needs at least one phase")
        if self.period <= 0:
            raise ScenarioInvalid(f"load {self.id}: period must be > 0")
        if self.deadline <= 0:
            raise ScenarioInvalid(f"load {self.id}: deadline must be > 0")
        if self.deadline > self.period + EPS_TIME:
            raise ScenarioInvalid(
                f"load {self.id}: deadline {self.deadline} exceeds period {self.period}"
            )
        if self.kind in (LoadKind.SIMPLE, LoadKind.THERMOSTATIC) and len(self.phases) != 1:
            raise ScenarioInvalid(f"load {self.id}: {self.kind.value} loads have exactly one phase")
        if self.kind is LoadKind.THERMOSTATIC:
            if self.thermo is None:
                raise ScenarioInvalid(f"load {self.id}: thermostatic loads need thermo params")
            if self.phases[0].duration is not None:
                raise ScenarioInvalid(
                    f"load {self.id}: thermostatic duration is derived, do not declare one"
                )
        else:
            if self.thermo is not None:
                raise ScenarioInvalid(f"load {self.id}: thermo params only apply to thermostatic loads")
            if any(p.duration is None for p in self.phases):
                raise ScenarioInvalid(f"load {self.id}: every phase needs a duration")
            total = math.fsum(p.duration for p in self.phases)
            if total > self.deadline + EPS_TIME:
                raise ScenarioInvalid(
                    f"load {self.id}: total phase duration {total} exceeds deadline {self.deadline}"
                )
        if self.kind is LoadKind.COMPOSITE:
            if self.priority is not None:
                raise ScenarioInvalid(f"load {self.id}: composite loads use per-phase priorities")
            if any(p.priority is None for p in self.phases):
                raise ScenarioInvalid(f"load {self.id}: every composite phase needs a priority")
        else:
            if self.priority is None:
                raise ScenarioInvalid(f"load {self.id}: needs a priority")
            if any(p.priority is not None for p in self.phases):
                raise ScenarioInvalid(
                    f"load {self.id}: per-phase priorities are for composite loads only"
                )

    def phase_priority(self, index: int) -> int:
        """Priority of the given phase (clamped to the last one)."""
        i = min(index, len(self.phases) - 1)
        if self.kind is LoadKind.COMPOSITE:
            return self.phases[i].priority  # type: ignore[return-value]
        return self.priority  # type: ignore[return-value]

    def priority_values(self) -> tuple[int, ...]:
        """Every priority ordinal this load occupies grid-wide."""
        if self.kind is LoadKind.COMPOSITE:
            return tuple(p.priority for p in self.phases)  # type: ignore[misc]
        return (self.priority,)  # type: ignore[return-value]


@dataclass(frozen=True)
class EffectiveParams:
    """Parameters of the effective instance of a load at some time.

    C is the total remaining-work budget of the instance; the *_current
    fields describe one phase (phase 0 as returned by effective_params;
    the engine re-points them at the live phase while an instance runs).
    `durations` carries the per-phase durations of this instance, with the
    thermostatic duration already frozen at the release temperature.
    """

    C: float
    E_current: float
    D: float
    T: float
    F_current: bool
    P_current: int
    release: float
    durations: tuple[float, ...]


def release_times(spec: LoadSpec, t_a: float, t_b: float) -> list[float]:
    """All release times first_release + k*period inside [t_a, t_b], ascending."""
    if t_b < t_a:
        raise ValueError(f"empty horizon: [{t_a}, {t_b}]")
    k = max(0, math.ceil((t_a - spec.first_release - EPS_TIME) / spec.period))
    out: list[float] = []
    while True:
        a = spec.first_release + k * spec.period
        if a > t_b + EPS_TIME:
            return out
        if a >= t_a - EPS_TIME:
            out.append(a)
        k += 1


def effective_instance_index(spec: LoadSpec, t: float) -> int:
    """Index k of the instance with a_n[k] <= t < a_n[k+1]."""
    if t < spec.first_release - EPS_TIME:
        raise QueryBeforeFirstRelease(
            f"load {spec.id}: t={t} precedes first release at {spec.first_release}"
        )
    return max(0, math.floor((t - spec.first_release + EPS_TIME) / spec.period))


def thermo_duty_cycle(x_stable: float, tp_out: float, g_out: float,
                      n_ac: float, p_ac: float) -> float:
    """Fraction of a cycle the compressor must run to hold the setpoint.

    Magnitude of the thermal-balance ratio, clamped to [0, 1]: a duty cycle
    is physically a fraction regardless of the heat-flow direction.
    """
    if p_ac <= 0 or n_ac <= 0:
        raise InvalidThermalParams(
            f"p_ac and n_ac must be positive, got p_ac={p_ac}, n_ac={n_ac}"
        )
    return min(abs(g_out / (n_ac * p_ac) * (x_stable - tp_out)), 1.0)


def thermo_operation_time(spec: LoadSpec, tp_out: float) -> float:
    """Execution time of one thermostatic instance: period times duty cycle."""
    if spec.kind is not LoadKind.THERMOSTATIC:
        raise ScenarioInvalid(f"load {spec.id} is not thermostatic")
    th = spec.thermo
    assert th is not None
    return spec.period * thermo_duty_cycle(th.x_stable, tp_out, th.g_out, th.n_ac, th.p_ac)


def instance_durations(spec: LoadSpec, release_time: float,
                       temperature: StepTrace | None = None) -> tuple[float, ...]:
    """Per-phase durations of the instance released at `release_time`.

    Thermostatic durations are frozen at the release-time outside
    temperature; all other kinds are static.
    """
    if spec.kind is LoadKind.THERMOSTATIC:
        if temperature is None:
            raise ScenarioInvalid(f"load {spec.id}: thermostatic load needs a temperature trace")
        return (thermo_operation_time(spec, temperature.value_at(release_time)),)
    return tuple(p.duration for p in spec.phases)  # type: ignore[misc]


def effective_params(spec: LoadSpec, t: float,
                     temperature: StepTrace | None = None) -> EffectiveParams:
    """Parameters of the effective instance at time t, phase 0 current."""
    k = effective_instance_index(spec, t)
    a = spec.first_release + k * spec.period
    durations = instance_durations(spec, a, temperature)
    ph0 = spec.phases[0]
    return EffectiveParams(
        C=math.fsum(durations),
        E_current=ph0.power,
        D=spec.deadline,
        T=spec.period,
        F_current=ph0.preemptive,
        P_current=spec.phase_priority(0),
        release=a,
        durations=durations,
    )


def params_at_phase(spec: LoadSpec, base: EffectiveParams, index: int) -> EffectiveParams:
    """Re-point the *_current fields of `base` at the given phase index."""
    i = min(index, len(spec.phases) - 1)
    ph = spec.phases[i]
    return replace(base, E_current=ph.power, F_current=ph.preemptive,
                   P_current=spec.phase_priority(i))
