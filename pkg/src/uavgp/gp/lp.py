"""Small dense LP front end (interior point via HiGHS, no simplex)."""
from __future__ import annotations

import numpy as np
from scipy.optimize import linprog

from .barrier import INFEASIBLE, NUMERICAL_FAILURE, OPTIMAL, SolveResult

UNBOUNDED = "unbounded"

_STATUS = {0: OPTIMAL, 1: NUMERICAL_FAILURE, 2: INFEASIBLE, 3: UNBOUNDED, 4: NUMERICAL_FAILURE}


def solve_lp(c, A_ub, b_ub, names=None, tol=1e-10):
    """Minimize ``c @ x`` subject to ``A_ub @ x <= b_ub`` with ``x`` free.

    Bounds are expected as explicit rows of ``A_ub`` so that the row count is
    the constraint count of the model.
    """
    c = np.asarray(c, dtype=float)
    A_ub = np.asarray(A_ub, dtype=float)
    b_ub = np.asarray(b_ub, dtype=float)
    names = list(names) if names is not None else [f"x{i}" for i in range(c.size)]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * c.size, method="highs-ipm",
                  options={"primal_feasibility_tolerance": tol, "dual_feasibility_tolerance": tol,
                           "ipm_optimality_tolerance": 1e-12})
    status = _STATUS.get(res.status, NUMERICAL_FAILURE)
    if status != OPTIMAL:
        return SolveResult(status, message=res.message, iterations=int(getattr(res, "nit", 0) or 0))
    viol = float(np.max(A_ub @ res.x - b_ub, initial=0.0))
    return SolveResult(OPTIMAL, dict(zip(names, res.x.tolist())), float(res.fun),
                       int(getattr(res, "nit", 0) or 0), {"primal_infeasibility": max(viol, 0.0)},
                       w=res.x)
