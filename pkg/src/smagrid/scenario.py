"""Scenario assembly and the scenario file format.

A scenario bundles the load set, the battery bank, the generation trace
(possibly summed from several component traces), an optional outside
temperature trace, and the simulation horizon.  Scenario files are TOML:

    [meta]
    power_unit = "kW"            # or "W"; load powers and generation traces
    horizon_h = [0.0, 24.0]      # are normalised to kW at load time

    [battery]
    capacity_kwh = 180.0         # battery keys are always kWh / kW,
    max_power_kw = 90.0          # independent of power_unit
    initial_soc = 1.0            # optional, default 1.0

    [generation]
    files = ["wind.csv", "fossil.csv"]   # step traces, summed pointwise

    [temperature]                # required iff any thermostatic load
    file = "outside_f.csv"

    [[load]]
    id = 1
    kind = "simple"              # simple | phased | composite | thermostatic
    priority = 1                 # composite loads set priority per phase
    deadline_h = 2.0
    period_h = 2.0
    first_release_h = 0.0        # optional, default 0
    phases = [ { power = 80.0, duration_h = 0.5, preemptive = false } ]

Thermostatic loads omit duration_h (it is derived each release) and add a
[load.thermo] table with g_out, c_h, n_ac, p_ac, x_stable.  Unknown keys
are rejected; diagnostics carry the file line where possible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib  # type: ignore[no-redef]

from .battery import BatteryBank
from .errors import ScenarioInvalid
from .loads import LoadKind, LoadSpec, Phase, ThermoParams, effective_instance_index
from .tolerances import EPS_TIME
from .trace import StepTrace, read_trace_csv, sum_traces


@dataclass(frozen=True)
class Scenario:
    loads: tuple[LoadSpec, ...]
    battery: BatteryBank
    generation: StepTrace
    horizon: tuple[float, float]
    temperature: StepTrace | None = None
    tie_break: str | None = None  # "index" permits duplicate priorities

    def __post_init__(self) -> None:
        t_a, t_b = self.horizon
        if not t_a < t_b:
            raise ScenarioInvalid(f"horizon must satisfy start < end, got [{t_a}, {t_b}]")
        ids = [spec.id for spec in self.loads]
        if len(set(ids)) != len(ids):
            raise ScenarioInvalid(f"duplicate load ids: {sorted(ids)}")
        if self.tie_break not in (None, "index"):
            raise ScenarioInvalid(f"unknown tie-break policy {self.tie_break!r}")
        if self.tie_break is None:
            seen: dict[int, int] = {}
            for spec in self.loads:
                for p in spec.priority_values():
                    if p in seen:
                        raise ScenarioInvalid(
                            f"priority {p} used by loads {seen[p]} and {spec.id}; "
                            "duplicate priorities need --tie-break=index"
                        )
                    seen[p] = spec.id
        if any(v < 0 for _, v in self.generation.breakpoints):
            raise ScenarioInvalid("generation trace values must be >= 0")
        if self.generation.start > t_a + EPS_TIME:
            raise ScenarioInvalid(
                f"generation trace starts at {self.generation.start}, after horizon start {t_a}"
            )
        needs_temp = [s.id for s in self.loads if s.kind is LoadKind.THERMOSTATIC]
        if needs_temp and self.temperature is None:
            raise ScenarioInvalid(
                f"loads {needs_temp} are thermostatic but no temperature trace is given"
            )
        if self.temperature is not None:
            for spec in self.loads:
                if spec.kind is not LoadKind.THERMOSTATIC:
                    continue
                # Earliest release the engine will query (warm starts look back).
                if spec.first_release >= t_a - EPS_TIME:
                    earliest = spec.first_release
                else:
                    k = effective_instance_index(spec, t_a)
                    earliest = spec.first_release + k * spec.period
                if self.temperature.start > earliest + EPS_TIME:
                    raise ScenarioInvalid(
                        f"temperature trace starts at {self.temperature.start}, after the "
                        f"first queried release {earliest} of load {spec.id}"
                    )


# ---------------------------------------------------------------------------
# TOML loading

_TOP_KEYS = {"meta", "battery", "generation", "temperature", "load"}
_META_KEYS = {"power_unit", "horizon_h"}
_BATTERY_KEYS = {"capacity_kwh", "max_power_kw", "initial_soc"}
_GENERATION_KEYS = {"files"}
_TEMPERATURE_KEYS = {"file"}
_LOAD_KEYS = {"id", "kind", "priority", "deadline_h", "period_h",
              "first_release_h", "phases", "thermo"}
_PHASE_KEYS = {"power", "duration_h", "preemptive", "priority"}
_THERMO_KEYS = {"g_out", "c_h", "n_ac", "p_ac", "x_stable"}


@dataclass
class _Diag:
    """Best-effort line numbers for semantic diagnostics."""

    path: Path
    lines: list[str] = field(default_factory=list)

    def line_of(self, token: str, start: int = 0, end: int | None = None) -> int | None:
        end = len(self.lines) if end is None else end
        for i in range(start, min(end, len(self.lines))):
            stripped = self.lines[i].strip()
            if stripped.startswith(token + " ") or stripped.startswith(token + "=") \
                    or stripped == token:
                return i + 1
        return None

    def fail(self, message: str, token: str | None = None,
             start: int = 0, end: int | None = None) -> ScenarioInvalid:
        lineno = self.line_of(token, start, end) if token else None
        where = f"{self.path}:{lineno}" if lineno else str(self.path)
        return ScenarioInvalid(f"{where}: {message}")

    def load_block_span(self, n: int) -> tuple[int, int]:
        """Line span (0-based, half-open) of the n-th [[load]] block."""
        starts = [i for i, ln in enumerate(self.lines) if ln.strip() == "[[load]]"]
        if n >= len(starts):
            return 0, len(self.lines)
        begin = starts[n]
        nxt = len(self.lines)
        for i in range(begin + 1, len(self.lines)):
            s = self.lines[i].strip()
            if s.startswith("[") and not s.startswith("[["):
                if not s.startswith("[load."):
                    nxt = i
                    break
            elif s == "[[load]]":
                nxt = i
                break
        return begin, nxt


def _reject_unknown(table: dict[str, Any], allowed: set[str], where: str,
                    diag: _Diag, span: tuple[int, int] = (0, None)) -> None:
    for key in table:
        if key not in allowed:
            raise diag.fail(f"unknown key {key!r} in {where}", key, span[0],
                            span[1] if span[1] is not None else None)


def _require(table: dict[str, Any], key: str, where: str, diag: _Diag,
             span: tuple[int, int] = (0, None)) -> Any:
    if key not in table:
        raise diag.fail(f"missing key {key!r} in {where}",
                        where.strip("[]").split(".")[0], span[0],
                        span[1] if span[1] is not None else None)
    return table[key]


def _number(value: Any, key: str, where: str, diag: _Diag) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise diag.fail(f"{key} in {where} must be a number, got {value!r}", key)
    return float(value)


def _load_phase(entry: Any, n: int, j: int, kind: LoadKind, scale: float,
                diag: _Diag, span: tuple[int, int]) -> Phase:
    where = f"[[load]] block {n + 1} phase {j + 1}"
    if not isinstance(entry, dict):
        raise diag.fail(f"{where} must be a table", "phases", *span)
    for key in entry:
        if key not in _PHASE_KEYS:
            raise diag.fail(f"unknown key {key!r} in {where}", key, *span)
    if "power" not in entry or "preemptive" not in entry:
        raise diag.fail(f"{where} needs power and preemptive", "phases", *span)
    power = _number(entry["power"], "power", where, diag) * scale
    preemptive = entry["preemptive"]
    if not isinstance(preemptive, bool):
        raise diag.fail(f"preemptive in {where} must be a boolean", "phases", *span)
    duration = None
    if "duration_h" in entry:
        duration = _number(entry["duration_h"], "duration_h", where, diag)
    elif kind is not LoadKind.THERMOSTATIC:
        raise diag.fail(f"{where} needs duration_h", "phases", *span)
    priority = None
    if "priority" in entry:
        if kind is not LoadKind.COMPOSITE:
            raise diag.fail(f"per-phase priority in {where} is for composite loads only",
                            "phases", *span)
        priority = entry["priority"]
        if isinstance(priority, bool) or not isinstance(priority, int):
            raise diag.fail(f"priority in {where} must be an integer", "phases", *span)
    return Phase(power=power, duration=duration, preemptive=preemptive, priority=priority)


def _load_block(block: Any, n: int, scale: float, diag: _Diag) -> LoadSpec:
    span = diag.load_block_span(n)
    where = f"[[load]] block {n + 1}"
    if not isinstance(block, dict):
        raise diag.fail(f"{where} must be a table", "[[load]]")
    _reject_unknown(block, _LOAD_KEYS, where, diag, span)
    kind_name = _require(block, "kind", where, diag, span)
    try:
        kind = LoadKind(kind_name)
    except ValueError:
        raise diag.fail(f"unknown load kind {kind_name!r} in {where}", "kind", *span) from None
    lid = _require(block, "id", where, diag, span)
    if isinstance(lid, bool) or not isinstance(lid, int):
        raise diag.fail(f"id in {where} must be an integer", "id", *span)
    phases_raw = _require(block, "phases", where, diag, span)
    if not isinstance(phases_raw, list) or not phases_raw:
        raise diag.fail(f"phases in {where} must be a non-empty array", "phases", *span)
    phases = tuple(_load_phase(p, n, j, kind, scale, diag, span)
                   for j, p in enumerate(phases_raw))
    priority = None
    if kind is not LoadKind.COMPOSITE:
        priority = _require(block, "priority", where, diag, span)
        if isinstance(priority, bool) or not isinstance(priority, int):
            raise diag.fail(f"priority in {where} must be an integer", "priority", *span)
    elif "priority" in block:
        raise diag.fail(f"composite {where} uses per-phase priorities", "priority", *span)
    thermo = None
    if kind is LoadKind.THERMOSTATIC:
        tbl = _require(block, "thermo", where, diag, span)
        if not isinstance(tbl, dict):
            raise diag.fail(f"thermo in {where} must be a table", "thermo", *span)
        _reject_unknown(tbl, _THERMO_KEYS, f"{where} thermo", diag, span)
        vals = {k: _number(_require(tbl, k, f"{where} thermo", diag, span),
                           k, f"{where} thermo", diag) for k in
                ("g_out", "c_h", "n_ac", "p_ac", "x_stable")}
        thermo = ThermoParams(g_out=vals["g_out"] * scale, c_h=vals["c_h"],
                              n_ac=vals["n_ac"], p_ac=vals["p_ac"] * scale,
                              x_stable=vals["x_stable"])
    elif "thermo" in block:
        raise diag.fail(f"thermo in {where} only applies to thermostatic loads",
                        "thermo", *span)
    try:
        return LoadSpec(
            id=lid,
            kind=kind,
            phases=phases,
            deadline=_number(_require(block, "deadline_h", where, diag, span),
                             "deadline_h", where, diag),
            period=_number(_require(block, "period_h", where, diag, span),
                           "period_h", where, diag),
            priority=priority,
            first_release=_number(block.get("first_release_h", 0.0),
                                  "first_release_h", where, diag),
            thermo=thermo,
        )
    except ScenarioInvalid as exc:
        raise diag.fail(str(exc), "[[load]]", *span) from None


def _scaled(trace: StepTrace, scale: float) -> StepTrace:
    if scale == 1.0:
        return trace
    return StepTrace(tuple((t, v * scale) for t, v in trace.breakpoints))


def load_scenario(path: str | Path, tie_break: str | None = None) -> Scenario:
    """Parse and validate a scenario file; trace paths resolve next to it."""
    path = Path(path)
    try:
        raw = path.read_text()
    except OSError as exc:
        raise ScenarioInvalid(f"{path}: {exc}") from None
    diag = _Diag(path=path, lines=raw.splitlines())
    try:
        doc = tomllib.loads(raw)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioInvalid(f"{path}: {exc}") from None

    _reject_unknown(doc, _TOP_KEYS, "the scenario file", diag)
    for section in ("meta", "battery", "generation"):
        if section not in doc:
            raise ScenarioInvalid(f"{path}: missing [{section}] section")

    meta = doc["meta"]
    _reject_unknown(meta, _META_KEYS, "[meta]", diag)
    unit = _require(meta, "power_unit", "[meta]", diag)
    if unit not in ("W", "kW"):
        raise diag.fail(f"power_unit must be 'W' or 'kW', got {unit!r}", "power_unit")
    scale = 1e-3 if unit == "W" else 1.0
    horizon_raw = _require(meta, "horizon_h", "[meta]", diag)
    if (not isinstance(horizon_raw, list) or len(horizon_raw) != 2
            or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in horizon_raw)):
        raise diag.fail("horizon_h must be a [start, end] pair of numbers", "horizon_h")
    horizon = (float(horizon_raw[0]), float(horizon_raw[1]))

    bat = doc["battery"]
    _reject_unknown(bat, _BATTERY_KEYS, "[battery]", diag)
    battery = BatteryBank(
        capacity=_number(_require(bat, "capacity_kwh", "[battery]", diag),
                         "capacity_kwh", "[battery]", diag),
        max_power=_number(_require(bat, "max_power_kw", "[battery]", diag),
                          "max_power_kw", "[battery]", diag),
        soc=_number(bat.get("initial_soc", 1.0), "initial_soc", "[battery]", diag),
    )

    gen_tbl = doc["generation"]
    _reject_unknown(gen_tbl, _GENERATION_KEYS, "[generation]", diag)
    files = _require(gen_tbl, "files", "[generation]", diag)
    if not isinstance(files, list) or not files or not all(isinstance(f, str) for f in files):
        raise diag.fail("[generation] files must be a non-empty array of paths", "files")
    traces = [_scaled(read_trace_csv(path.parent / f), scale) for f in files]
    generation = traces[0]
    for tr in traces[1:]:
        generation = sum_traces(generation, tr)

    temperature = None
    if "temperature" in doc:
        tmp_tbl = doc["temperature"]
        _reject_unknown(tmp_tbl, _TEMPERATURE_KEYS, "[temperature]", diag)
        temperature = read_trace_csv(
            path.parent / _require(tmp_tbl, "file", "[temperature]", diag))

    blocks = doc.get("load", [])
    if not isinstance(blocks, list):
        raise diag.fail("[[load]] must be an array of tables", "[load]")
    loads = tuple(_load_block(b, n, scale, diag) for n, b in enumerate(blocks))

    try:
        return Scenario(loads=loads, battery=battery, generation=generation,
                        horizon=horizon, temperature=temperature, tie_break=tie_break)
    except ScenarioInvalid as exc:
        raise ScenarioInvalid(f"{path}: {exc}") from None
