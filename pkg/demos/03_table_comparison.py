"""Joint lifted solve vs alternating per-axis solve, side by side.

Runs both routes at 4x4 through the canned "table1" experiment and prints
the comparison table: both land on the same shaped-gain value (the lifted
program is solved to its certified optimum; the alternating route reaches
it through two tiny per-axis programs). The experiment directory keeps
solutions, convergence traces, timing, and metrics for inspection.
"""

import csv
import os
import warnings

from irsbeam import evaluate
from irsbeam.scenario import load_scenario

HERE = os.path.dirname(__file__)
OUT = os.path.join(HERE, "out")


def main():
    os.makedirs(OUT, exist_ok=True)
    scn = load_scenario(os.path.join(HERE, os.pardir, "scenarios",
                                     "table1_4x4.json"))
    print("running both optimizer routes at 4x4 (about 15 s)...\n")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        exp_dir = evaluate.run_experiment(scn, "table1", OUT, sizes=[4])

    with open(os.path.join(exp_dir, "metrics.csv"), encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    print(f"{'run':<12} {'rho dB':>8} {'margin dB':>10} {'status':>8}")
    for row in rows:
        print(f"{row['label']:<12} {float(row['rho_db']):8.2f} "
              f"{float(row['sidelobe_margin_db']):10.2f} {row['status']:>8}")

    joint = next(r for r in rows if r["label"].startswith("joint"))
    ao = next(r for r in rows if r["label"].startswith("ao"))
    gap = abs(float(joint["rho_db"]) - float(ao["rho_db"]))
    print(f"\nroute gap: {gap:.3f} dB — the alternating route pays almost "
          f"nothing for never lifting the full surface")
    print(f"artifacts (solutions, convergence_*.csv, timings.csv): {exp_dir}")


if __name__ == "__main__":
    main()
