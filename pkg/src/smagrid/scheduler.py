"""Priority-ordered greedy admission for one instant.

The executing set starts from the non-deferrable loads, which are admitted
unconditionally (shortfall is the feasibility module's concern, not the
scheduler's).  Deferrable loads with outstanding work are then considered
one at a time in ascending priority value (smaller value = higher priority)
and admitted only while the running total stays within generation plus
battery headroom.  Rejections are recorded so the greedy certificate can be
replayed afterwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

from .loads import EffectiveParams
from .sma_state import SmaVector, non_deferrable
from .tolerances import EPS_POWER, EPS_TIME


@dataclass(frozen=True)
class Rejection:
    load_id: int
    demand: float     # kW the load asked for
    available: float  # kW left under the supply cap when it was considered


@dataclass(frozen=True)
class AdmissionResult:
    op_set: frozenset[int]
    rejected: tuple[Rejection, ...]
    total_demand: float  # kW drawn by op_set
    supply: float        # kW available: generation + battery headroom


def build_op_set(vector: SmaVector, params: Mapping[int, EffectiveParams],
                 eg: float, battery_headroom: float) -> AdmissionResult:
    """Construct the executing set for this instant.

    `params` must carry the *_current fields of each load's live phase; only
    the current phase of a composite load is schedulable (phases are
    strictly sequential).  Admission is all-or-nothing per load.  Ties in
    priority value fall back to ascending load id, which only matters when
    the scenario explicitly allowed duplicate priorities.
    """
    supply = eg + battery_headroom
    op = non_deferrable(vector, params)
    demand = math.fsum(params[i].E_current for i in op)
    pool = sorted(
        (i for i, p in params.items() if vector.states[i].r > EPS_TIME and i not in op),
        key=lambda i: (params[i].P_current, i),
    )
    rejected: list[Rejection] = []
    for i in pool:
        e = params[i].E_current
        if demand + e <= supply + EPS_POWER:
            op.add(i)
            demand += e
        else:
            rejected.append(Rejection(i, e, supply - demand))
    return AdmissionResult(op_set=frozenset(op), rejected=tuple(rejected),
                           total_demand=math.fsum(params[i].E_current for i in op),
                           supply=supply)
