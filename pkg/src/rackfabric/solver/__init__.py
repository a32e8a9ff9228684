"""Placement and wavelength-assignment optimisation for a rack instance."""

from ..power import SolverWeights
from .brute import brute_force
from .exact import solve_exact
from .greedy import solve_greedy
from .local import improve, seed_solution
from .model import (
    OBJ_TOL,
    SCENARIOS,
    Instance,
    ProblemTooLarge,
    Solution,
    better,
    evaluate,
    is_split,
    lower_bound,
    scenario_weights,
    solution_to_dict,
    vector_key,
)

__all__ = [
    "OBJ_TOL",
    "SCENARIOS",
    "Instance",
    "ProblemTooLarge",
    "Solution",
    "SolverWeights",
    "better",
    "brute_force",
    "evaluate",
    "improve",
    "is_split",
    "lower_bound",
    "scenario_weights",
    "seed_solution",
    "solution_to_dict",
    "solve_exact",
    "solve_greedy",
    "vector_key",
]
