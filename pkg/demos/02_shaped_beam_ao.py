"""Shaping a wide lobe with the alternating per-axis optimizer.

Runs the axis-alternating route on a small 4x4 surface against a
20-degree-wide flat mainlobe with a 5 dB sidelobe target, then shows the
round-by-round trace: the certified sidelobe ratio each round ran at, the
worst-case mainlobe gain, and the final margins recomputed from the
extracted phases. Writes solution + pattern to demos/out/.
"""

import json
import os
import warnings

from irsbeam import evaluate
from irsbeam.optimizer import focus_init, save_solution, solve_ao
from irsbeam.scenario import load_scenario

HERE = os.path.dirname(__file__)
OUT = os.path.join(HERE, "out")


def main():
    os.makedirs(OUT, exist_ok=True)
    scn = load_scenario(os.path.join(HERE, os.pardir, "scenarios",
                                     "table1_4x4.json"))
    print(f"{scn.m_y}x{scn.m_z} surface; mainlobe "
          f"phi [-10,10] x theta [120,140] deg, sidelobe target "
          f"{scn.delta_db:.0f} dB below the weakest mainlobe sample\n")

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        base = focus_init(scn)
        sol = solve_ao(scn)

    print(f"focus start : rho {base.rho_db:6.2f} dB (a needle misses the "
          f"mask corners)")
    print(f"optimized   : rho {sol.rho_db:6.2f} dB after "
          f"{sol.wall_time_s:.1f} s\n")

    rounds = sol.traces["rounds"]
    print("round  rho_dB   sidelobe ratio ran at (y/z, dB)")
    for i, rho in enumerate(rounds["rho_db"]):
        print(f"{i:5d}  {rho:7.3f}  {rounds['delta_y_db'][i]:6.2f} / "
              f"{rounds['delta_z_db'][i]:6.2f}")

    report = evaluate.metrics(scn, sol)
    print(f"\nrecomputed from extracted phases: weakest mainlobe "
          f"{report.mainlobe_min_db:.2f} dB, strongest sidelobe "
          f"{report.sidelobe_max_db:.2f} dB, margin "
          f"{report.sidelobe_margin_db:.2f} dB (target {scn.delta_db:.0f})")

    save_solution(sol, os.path.join(OUT, "solution_ao_4x4.json"))
    grid = evaluate.sweep_pattern(scn, sol)
    evaluate.write_pattern_csv(grid, os.path.join(OUT, "pattern_ao_4x4.csv"))
    with open(os.path.join(OUT, "metrics_ao_4x4.json"), "w",
              encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=1)
    print(f"wrote solution, pattern sweep, and metrics under {OUT}")


if __name__ == "__main__":
    main()
