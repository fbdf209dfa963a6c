"""Command line front end.

Verbs:
  optimize    solve a scenario and write a solution JSON
  evaluate    sweep a solution into a gain-map CSV plus a metrics JSON
  quantize    snap a solution to a b-bit phase grid
  assemble    emit the manufacturing map (assembly.json, bom.csv)
  experiment  run one of the canned studies into a timestamped directory

Exit codes: 0 success, 1 unexpected failure, 2 bad scenario input,
3 infeasible shaping program, 4 internal invariant violation.
"""

import argparse
import json
import os
import sys

from . import dna, evaluate
from .errors import (InternalInvariantError, ScenarioParseError,
                     ScenarioValidationError, SolverInfeasibleError)
from .optimizer import (check_solution_matches, focus_init, load_solution,
                        random_baseline, save_solution, solve_ao, solve_joint)
from .scenario import from_dict, load_scenario


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="irsbeam",
        description="Shaped reflection-beam synthesis for quasi-static "
                    "reflecting surfaces")
    parser.add_argument("--scenario", metavar="PATH",
                        help="scenario JSON (omit for the built-in default)")
    parser.add_argument("--out", metavar="DIR", default="out",
                        help="output directory (default: ./out)")
    parser.add_argument("--seed", type=int, default=0,
                        help="RNG seed for randomized methods (default: 0)")
    sub = parser.add_subparsers(dest="verb", required=True)

    p_opt = sub.add_parser("optimize", help="synthesize a phase profile")
    p_opt.add_argument("--method", choices=("joint", "ao", "focus", "random"),
                       default="ao")
    p_opt.add_argument("--dump-subproblems", action="store_true",
                       help="dump each conic subproblem next to the solution")

    p_eval = sub.add_parser("evaluate", help="gain map and metrics for a solution")
    p_eval.add_argument("--solution", required=True, metavar="PATH")
    p_eval.add_argument("--phi-step", type=float, default=1.0)
    p_eval.add_argument("--theta-step", type=float, default=1.0)

    p_quant = sub.add_parser("quantize", help="snap a solution to a b-bit grid")
    p_quant.add_argument("--solution", required=True, metavar="PATH")
    p_quant.add_argument("--bits", type=int, default=2)

    p_asm = sub.add_parser("assemble", help="manufacturing map for a quantized solution")
    p_asm.add_argument("--solution", required=True, metavar="PATH")
    p_asm.add_argument("--transforms", choices=sorted(dna.TRANSFORM_SETS),
                       default="mirror")

    p_exp = sub.add_parser("experiment", help="run a canned study")
    p_exp.add_argument("--kind", choices=evaluate.EXPERIMENT_KINDS, required=True)
    p_exp.add_argument("--sizes", metavar="N,N,...",
                       help="square surface sizes, e.g. 4,8,16")
    return parser


def _load_scenario_arg(args):
    if args.scenario:
        return load_scenario(args.scenario)
    return from_dict({})


def _cmd_optimize(args):
    scn = _load_scenario_arg(args)
    os.makedirs(args.out, exist_ok=True)
    dump_dir = args.out if args.dump_subproblems else None
    if args.method == "joint":
        sol = solve_joint(scn, dump_dir=dump_dir)
    elif args.method == "ao":
        sol = solve_ao(scn, dump_dir=dump_dir)
    elif args.method == "focus":
        sol = focus_init(scn)
    else:
        sol = random_baseline(scn, seed=args.seed)
    path = os.path.join(args.out, f"solution_{args.method}.json")
    save_solution(sol, path)
    print(f"{args.method}: {scn.m_y}x{scn.m_z} surface, "
          f"rho {sol.rho_db:.2f} dB, {sol.wall_time_s:.1f} s -> {path}")
    return 0


def _cmd_evaluate(args):
    scn = _load_scenario_arg(args)
    sol = load_solution(args.solution)
    check_solution_matches(sol, scn)
    os.makedirs(args.out, exist_ok=True)
    report = evaluate.metrics(scn, sol)
    grid = evaluate.sweep_pattern(scn, sol, args.phi_step, args.theta_step)
    stem = os.path.splitext(os.path.basename(args.solution))[0]
    pattern_path = os.path.join(args.out, f"pattern_{stem}.csv")
    metrics_path = os.path.join(args.out, f"metrics_{stem}.json")
    evaluate.write_pattern_csv(grid, pattern_path)
    with open(metrics_path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=1)
    print(f"rho {report.rho_db:.2f} dB, worst sidelobe {report.sidelobe_max_db:.2f} dB, "
          f"margin {report.sidelobe_margin_db:.2f} dB (target {report.delta_db:.1f})")
    print(f"wrote {pattern_path} and {metrics_path}")
    return 0


def _cmd_quantize(args):
    scn = _load_scenario_arg(args)
    sol = load_solution(args.solution)
    check_solution_matches(sol, scn)
    os.makedirs(args.out, exist_ok=True)
    q = dna.quantize(scn, sol, args.bits)
    beam = dna.to_beam_solution(q)
    path = os.path.join(args.out, f"solution_{beam.method}.json")
    save_solution(beam, path)
    print(f"{args.bits}-bit grid: rho {q.rho_db:.2f} dB "
          f"({q.rho_db - q.parent_rho_db:+.2f} dB vs continuous) -> {path}")
    return 0


def _cmd_assemble(args):
    sol = load_solution(args.solution)
    q = dna.from_beam_solution(sol)
    catalog = dna.build_catalog(q.bits, transform_set=args.transforms)
    asm = dna.assemble(q, catalog)
    os.makedirs(args.out, exist_ok=True)
    asm_path = os.path.join(args.out, "assembly.json")
    bom_path = os.path.join(args.out, "bom.csv")
    dna.write_assembly_json(asm, asm_path)
    dna.write_bom_csv(asm, bom_path)
    counts = ", ".join(f"P{j}x{c}" for j, c in enumerate(asm.bom))
    print(f"{q.m_y}x{q.m_z} surface from {catalog.base_count} base patterns "
          f"({counts}) -> {asm_path}, {bom_path}")
    return 0


def _cmd_experiment(args):
    scn = _load_scenario_arg(args)
    sizes = None
    if args.sizes:
        sizes = [int(tok) for tok in args.sizes.split(",") if tok.strip()]
    out_dir = evaluate.run_experiment(scn, args.kind, args.out,
                                      seed=args.seed, sizes=sizes)
    print(f"experiment {args.kind} -> {out_dir}")
    return 0


_COMMANDS = {
    "optimize": _cmd_optimize,
    "evaluate": _cmd_evaluate,
    "quantize": _cmd_quantize,
    "assemble": _cmd_assemble,
    "experiment": _cmd_experiment,
}


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.verb](args)
    except (ScenarioParseError, ScenarioValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SolverInfeasibleError as exc:
        print(f"error: shaping program is infeasible: {exc}", file=sys.stderr)
        return 3
    except InternalInvariantError as exc:
        print(f"error: internal invariant violated: {exc}", file=sys.stderr)
        return 4
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
