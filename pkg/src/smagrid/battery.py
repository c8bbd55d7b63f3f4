"""Battery bank: SOC window, discharge headroom, and exact linear dynamics.

The bank is reduced to two constants (energy capacity and a symmetric
charge/discharge power cap) plus the state of charge, which must stay in
[20%, 100%].  Below-floor output and above-ceiling charging are simply
unavailable rather than error states; the engine schedules an event at
every boundary crossing so integration between events is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import BoundaryCrossed, ScenarioInvalid
from .tolerances import EPS_POWER, EPS_SOC, SOC_CEILING, SOC_FLOOR


@dataclass(frozen=True)
class BatteryBank:
    capacity: float   # kWh
    max_power: float  # kW; 0 disables the bank entirely
    soc: float        # fraction of capacity

    def __post_init__(self) -> None:
        if self.capacity <= 0:
            raise ScenarioInvalid(f"battery capacity must be > 0, got {self.capacity}")
        if self.max_power < 0:
            raise ScenarioInvalid(f"battery max_power must be >= 0, got {self.max_power}")
        if not SOC_FLOOR - EPS_SOC <= self.soc <= SOC_CEILING + EPS_SOC:
            raise ScenarioInvalid(
                f"soc must lie in [{SOC_FLOOR}, {SOC_CEILING}], got {self.soc}"
            )
        object.__setattr__(self, "soc", min(max(self.soc, SOC_FLOOR), SOC_CEILING))


def headroom(bank: BatteryBank) -> float:
    """Discharge power available right now: the full rate above the 20% floor, else 0."""
    return bank.max_power if bank.soc > SOC_FLOOR + EPS_SOC else 0.0


@dataclass(frozen=True)
class PowerSplit:
    battery_power: float  # kW, positive while charging, negative while discharging
    deficiency: float     # kW of demand nothing can serve
    curtailed: float      # kW of surplus generation thrown away


def power_split(bank: BatteryBank, eg: float, demand: float) -> PowerSplit:
    """Reconcile generation against demand through the bank.

    Surplus charges the bank up to its power cap while below the ceiling and
    is curtailed beyond that; shortfall discharges up to the headroom, and
    whatever remains is deficiency.
    """
    if eg < 0 or demand < 0:
        raise ValueError(f"eg and demand must be >= 0, got eg={eg}, demand={demand}")
    net = eg - demand
    if net >= 0.0:
        charge = min(net, bank.max_power) if bank.soc < SOC_CEILING - EPS_SOC else 0.0
        return PowerSplit(battery_power=charge, deficiency=0.0, curtailed=net - charge)
    short = -net
    discharge = min(short, headroom(bank))
    return PowerSplit(battery_power=-discharge, deficiency=short - discharge, curtailed=0.0)


def integrate_soc(bank: BatteryBank, battery_power: float, dt: float) -> BatteryBank:
    """Advance SOC linearly across an event-free interval.

    The caller guarantees no boundary crossing strictly inside (0, dt);
    landing on a boundary within tolerance clamps, anything further raises.
    """
    if dt < 0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    if abs(battery_power) > bank.max_power + EPS_POWER:
        raise ValueError(
            f"|battery_power| {abs(battery_power)} exceeds max_power {bank.max_power}"
        )
    raw = bank.soc + battery_power * dt / bank.capacity
    if raw < SOC_FLOOR - EPS_SOC or raw > SOC_CEILING + EPS_SOC:
        raise BoundaryCrossed(
            f"SOC stepped to {raw}; caller skipped a boundary event (dt={dt})"
        )
    return replace(bank, soc=min(max(raw, SOC_FLOOR), SOC_CEILING))


def time_to_soc_event(bank: BatteryBank, battery_power: float) -> float:
    """Hours until the SOC path hits the floor (discharging) or ceiling (charging)."""
    if battery_power < -EPS_POWER:
        return (bank.soc - SOC_FLOOR) * bank.capacity / -battery_power
    if battery_power > EPS_POWER:
        return (SOC_CEILING - bank.soc) * bank.capacity / battery_power
    return math.inf
