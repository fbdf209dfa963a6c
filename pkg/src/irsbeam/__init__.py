"""Shaped reflection-beam synthesis for large quasi-static reflecting surfaces.

A scenario (geometry, radiation model, shaping mask) is compiled into a
lifted conic feasibility program; joint or alternating per-axis solves
produce a phase profile, which can be quantized to a b-bit grid and mapped
onto a small catalog of manufacturable element patterns.
"""

from .channel import (coefficient_matrix, erp, eta_sq, gamma, gamma_factored,
                      link_budget, trace_gain)
from .conic import (CeilingRow, ConicProblem, ConicSolution, FloorRow,
                    SolverOptions, dominant_eigvec, dump_problem,
                    embed_problem, embed_real, hmat, hvec, load_problem,
                    project_psd, solve, verify_solution)
from .dna import (AssemblyMap, PatternCatalog, QuantizedSolution, assemble,
                  build_catalog, from_beam_solution, quantize,
                  reconstruct_phases, to_beam_solution, write_assembly_json,
                  write_bom_csv)
from .errors import (InternalInvariantError, IrsBeamError, ScenarioParseError,
                     ScenarioValidationError, SolverInfeasibleError)
from .evaluate import (MetricsReport, PatternGrid, metrics, run_experiment,
                       sweep_pattern, write_pattern_csv)
from .masks import MaskSamples, build_samples, check_samples, samples_to_csv
from .optimizer import (BeamSolution, achieved_levels, axis_problem,
                        check_solution_matches, extract_phases, focus_init,
                        joint_problem, load_solution, mainlobe_center,
                        random_baseline, save_solution, solve_ao, solve_joint)
from .scenario import (AnglePair, MaskRegion, MaskShape, MaskSpec, Scenario,
                       Violation, digest, from_dict, load_scenario, replace,
                       to_dict, validate)
from .steering import axis_factors, full_steering, steering_component, unit_direction
from .units import NEG_GAIN_DB, SPEED_OF_LIGHT, db2lin, lin2db

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
