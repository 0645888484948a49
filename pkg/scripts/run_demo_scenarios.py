#!/usr/bin/env python3
"""Run the bundled demo scenarios and summarize the energy-bound audits.

Writes traces.csv / report.json per scenario under --out-dir (default
./demo_runs) and prints one line per run.
"""

import argparse
import os
from importlib import resources

from hyperstab.harness import run_closed_loop, scenario_from_json_dict, write_run_artifacts

import json


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="demo_runs")
    args = parser.parse_args()

    scenario_dir = resources.files("hyperstab").joinpath("data/scenarios")
    names = sorted(p.name for p in scenario_dir.iterdir() if p.name.endswith(".json"))
    print(f"{'scenario':<28} {'grade':<6} {'verdict':<36} violations")
    for name in names:
        data = json.loads(scenario_dir.joinpath(name).read_text())
        run = run_closed_loop(scenario_from_json_dict(data))
        out = os.path.join(args.out_dir, name.removesuffix(".json"))
        write_run_artifacts(run, out)
        n_viol = run.bound_audit.violation_count if run.bound_audit else "-"
        print(
            f"{name:<28} {run.classification.grade.value:<6} "
            f"{run.verdict.value:<36} {n_viol}"
        )
    print(f"artifacts under {args.out_dir}/")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
