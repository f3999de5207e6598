"""Charging-station location on a weighted p-median model with substation limits."""

from evcsl.model import (UNBOUNDED, Evaluation, Instance, InstanceError, Solution,
                         SolutionError, apply_swap, brute_force_optimum,
                         check_substation_feasibility, compare, delta_swap, evaluate)
from evcsl.run import Budget, RunResult
from evcsl.ga import GA_PRESETS, GaConfig, run_ga
from evcsl.vns import VNS_PRESETS, VnsConfig, run_vns
from evcsl.solvers import PRESETS, resolve, solve, solve_preset

__all__ = [
    "UNBOUNDED", "Evaluation", "Instance", "InstanceError", "Solution", "SolutionError",
    "apply_swap", "brute_force_optimum", "check_substation_feasibility", "compare",
    "delta_swap", "evaluate", "Budget", "RunResult", "GA_PRESETS", "GaConfig", "run_ga",
    "VNS_PRESETS", "VnsConfig", "run_vns", "PRESETS", "resolve", "solve", "solve_preset",
]
