"""Geometric-programming machinery: modeling, log transform, barrier solver, LP."""
from .barrier import (INFEASIBLE, MAX_ITERATIONS, NUMERICAL_FAILURE, OPTIMAL, SolveResult,
                      SolverOptions, solve_convex, solve_gp)
from .convex import ConvexProgram, to_convex
from .lp import UNBOUNDED, solve_lp
from .posynomial import GpFormError, GpProblem, Monomial, Posynomial, Variable, dump, evaluate

__all__ = [
    "ConvexProgram", "GpFormError", "GpProblem", "Monomial", "Posynomial", "SolveResult",
    "SolverOptions", "Variable", "dump", "evaluate", "solve_convex", "solve_gp", "solve_lp",
    "to_convex", "OPTIMAL", "INFEASIBLE", "MAX_ITERATIONS", "NUMERICAL_FAILURE", "UNBOUNDED",
]
