#!/usr/bin/env python3
"""Run the bundled 24 h seven-load scenario and summarise the result.

Writes the full timeline as CSV (plot-ready: demand vs generation, battery
power and SOC, deficiency) and prints the feasibility verdict with every
deficiency window.
"""

from __future__ import annotations

import argparse
from pathlib import Path

from smagrid import check_feasibility, load_scenario, run, write_timeline_csv

SCENARIO = Path(__file__).resolve().parents[1] / "scenarios" / "paper_sec6.toml"


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="paper_sec6_timeline.csv")
    args = parser.parse_args()

    scenario = load_scenario(SCENARIO)
    timeline = run(scenario)
    write_timeline_csv(timeline, args.out)

    report = check_feasibility(timeline)
    print(f"records: {len(timeline.records)}   -> {args.out}")
    print(f"verdict: {'FEASIBLE' if timeline.summary.feasible else 'INFEASIBLE'}")
    for iv in report.deficiency_intervals:
        print(f"  short {iv.peak:.6g} kW on [{iv.start:.6g}, {iv.end:.6g}) h "
              f"({iv.energy:.6g} kWh unserved)")
    swings = sum(1 for a, b in zip(timeline.records, timeline.records[1:])
                 if (a.battery_power > 0) != (b.battery_power > 0))
    soc_min = min(rec.soc for rec in timeline.records)
    print(f"battery: {swings} charge/discharge swings, minimum SOC {soc_min:.3f}")


if __name__ == "__main__":
    main()
