"""Exception types shared across the package."""


class SmaGridError(Exception):
    """Base class for all errors raised by this package."""


class ScenarioInvalid(SmaGridError):
    """Scenario, load, or trace specification rejected at load time."""


class InvalidThermalParams(ScenarioInvalid):
    """Thermostatic load with non-positive compressor power or COP."""


class QueryBeforeFirstRelease(SmaGridError):
    """Effective-instance query at a time before the load's first release."""


class QueryBeforeTraceStart(SmaGridError):
    """Trace evaluated before its first breakpoint."""


class NotAtReleaseInstant(SmaGridError):
    """reset_on_release called while s is not zero (within tolerance)."""


class EventSkipped(SmaGridError):
    """advance() was asked to step across a state event."""


class BoundaryCrossed(SmaGridError):
    """SOC integration stepped across the 20% floor or the 100% ceiling."""


class NonTermination(SmaGridError):
    """Event-loop guard tripped: too many events for one run."""
