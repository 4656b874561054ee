"""Log-barrier interior-point solver for log-transformed geometric programs."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .convex import to_convex

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
MAX_ITERATIONS = "max-iterations"
NUMERICAL_FAILURE = "numerical-failure"


@dataclass
class SolverOptions:
    tol: float = 1e-8
    t_init: float = 1.0
    mu: float = 10.0
    armijo: float = 0.01
    shrink: float = 0.5
    newton_tol: float = 1e-10
    max_newton: int = 200
    max_total_newton: int = 2000
    phase1_margin: float = 1e-3
    phase1_radius: float = 10.0
    quadratic_region: float = 0.05
    precision_floor: float = 1e-6


@dataclass
class SolveResult:
    status: str
    values: dict = field(default_factory=dict)
    objective: float = math.nan
    iterations: int = 0
    kkt: dict = field(default_factory=dict)
    outer_objectives: list = field(default_factory=list)
    message: str = ""
    w: np.ndarray | None = field(default=None, repr=False)

    @property
    def ok(self):
        return self.status == OPTIMAL


class _Failure(Exception):
    def __init__(self, status, message):
        self.status = status
        super().__init__(message)


class _Barrier:
    """Centering machinery for ``t * f0(w) - sum log(-f_i(w)) - box logs``."""

    def __init__(self, prog, opts):
        self.prog = prog
        self.opts = opts
        self.has_lo = np.isfinite(prog.lower)
        self.has_hi = np.isfinite(prog.upper)
        self.n_box = int(self.has_lo.sum() + self.has_hi.sum())
        self.newton_steps = 0
        self.last_decrement = math.inf

    @property
    def m_eff(self):
        return self.prog.m + self.n_box

    def strictly_inside(self, w, f=None):
        if np.any(w[self.has_lo] <= self.prog.lower[self.has_lo]):
            return False
        if np.any(w[self.has_hi] >= self.prog.upper[self.has_hi]):
            return False
        if f is None:
            f = self.prog.values(w)
        return bool(np.all(f[1:] < 0)) and bool(np.all(np.isfinite(f)))

    def phi(self, w, tb, f=None):
        if f is None:
            f = self.prog.values(w)
        val = tb * f[0] - np.log(-f[1:]).sum()
        val -= np.log(w[self.has_lo] - self.prog.lower[self.has_lo]).sum()
        val -= np.log(self.prog.upper[self.has_hi] - w[self.has_hi]).sum()
        return val

    def grad_hess(self, w, tb, f):
        cons = f[1:]
        cterm = np.concatenate([[tb], -1.0 / cons])
        couter = np.concatenate([[0.0], 1.0 / cons ** 2])
        grad, hess = self.prog.derivs(w, cterm, couter)
        dl = w[self.has_lo] - self.prog.lower[self.has_lo]
        du = self.prog.upper[self.has_hi] - w[self.has_hi]
        grad[self.has_lo] -= 1.0 / dl
        grad[self.has_hi] += 1.0 / du
        diag = np.zeros_like(w)
        diag[self.has_lo] += 1.0 / dl ** 2
        diag[self.has_hi] += 1.0 / du ** 2
        hess[np.diag_indices_from(hess)] += diag
        return grad, hess

    def newton_direction(self, grad, hess):
        # symmetric diagonal equilibration: late barrier stages put ~(t/f)^2
        # on the few variables of active rows and ~1 elsewhere
        d = np.diag(hess).copy()
        d = 1.0 / np.sqrt(np.where(d > 0, d, 1.0))
        hs = hess * d[:, None] * d[None, :]
        gs = grad * d
        try:
            factor = cho_factor(hs, lower=True, check_finite=False)
            return -d * cho_solve(factor, gs, check_finite=False)
        except (LinAlgError, ValueError):
            pass
        # semidefinite Hessian: regularize on the (unit) scale of its diagonal
        ridge = 1e-12
        for _ in range(8):
            try:
                factor = cho_factor(hs + ridge * np.eye(len(grad)), lower=True, check_finite=False)
                return -d * cho_solve(factor, gs, check_finite=False)
            except (LinAlgError, ValueError):
                ridge *= 100.0
        raise _Failure(NUMERICAL_FAILURE, "Newton system could not be factorized")

    def center(self, w, tb, stop=None):
        opts = self.opts
        f = self.prog.values(w)
        grad = None
        prev = math.inf
        for _ in range(opts.max_newton):
            if stop is not None and stop(w, f):
                return w, f, grad, True
            grad, hess = self.grad_hess(w, tb, f)
            dw = self.newton_direction(grad, hess)
            dec = -0.5 * float(grad @ dw)
            if not math.isfinite(dec):
                raise _Failure(NUMERICAL_FAILURE, "non-finite Newton decrement")
            self.last_decrement = dec
            if dec <= opts.newton_tol:
                return w, f, grad, False
            # inside the quadratic region the decrement stops shrinking only
            # once rounding in the barrier terms dominates
            if dec < opts.quadratic_region and dec > 0.25 * prev:
                if dec <= opts.precision_floor:
                    return w, f, grad, False
            self.newton_steps += 1
            if self.newton_steps > opts.max_total_newton:
                raise _Failure(MAX_ITERATIONS, "Newton step budget exhausted")
            w, f = self._line_search(w, f, tb, grad, dw, dec)
            prev = dec
        raise _Failure(MAX_ITERATIONS, "centering did not converge")

    def _line_search(self, w, f, tb, grad, dw, dec):
        opts = self.opts
        armijo = dec >= opts.quadratic_region
        phi0 = self.phi(w, tb, f) if armijo else 0.0
        slope = float(grad @ dw)
        step = 1.0
        while step >= 1e-14:
            cand = w + step * dw
            fc = self.prog.values(cand)
            if self.strictly_inside(cand, fc):
                if not armijo or self.phi(cand, tb, fc) <= phi0 + opts.armijo * step * slope:
                    return cand, fc
            step *= opts.shrink
        raise _Failure(NUMERICAL_FAILURE, "line search failed")


def _initial_point(prog):
    w = prog.w0.copy()
    lo, hi = prog.lower, prog.upper
    width = np.where(np.isfinite(lo) & np.isfinite(hi), hi - lo, np.inf)
    pad = np.minimum(1e-2, 0.25 * width)
    w = np.where(np.isfinite(lo) & (w < lo + pad), lo + pad, w)
    w = np.where(np.isfinite(hi) & (w > hi - pad), hi - pad, w)
    return w


def _run_barrier(prog, w, opts, stop=None):
    bar = _Barrier(prog, opts)
    tb = opts.t_init
    outer = []
    while True:
        final = bar.m_eff / tb <= opts.tol
        w, f, grad, stopped = bar.center(w, tb, stop=stop)
        outer.append(float(f[0]))
        if stopped or final:
            return w, f, grad, tb, bar, outer, stopped
        tb *= opts.mu


def phase_one(prog, opts):
    """Find a strictly feasible point of ``prog`` or prove there is none.

    Returns ``(w, slack, newton_steps)``; ``slack < 0`` means ``w`` is
    strictly feasible.
    """
    w = _initial_point(prog)
    f = prog.values(w)
    if np.all(f[1:] < -opts.phase1_margin):
        return w, float(f[1:].max()), 0
    aux = prog.with_slack()
    s0 = max(float(f[1:].max()), 0.0) + 1.0
    aux.w0 = np.append(w, s0)
    aux.lower[-1] = -1.0
    aux.upper[-1] = s0 + 10.0
    # the slack objective ignores variables that only loosen constraints
    # (an epigraph variable, say), so bound every variable to keep the
    # auxiliary central path finite
    aux.lower[:-1] = np.maximum(aux.lower[:-1], w - opts.phase1_radius)
    aux.upper[:-1] = np.minimum(aux.upper[:-1], w + opts.phase1_radius)

    def stop(z, fz):
        return float(np.max(fz[1:] + z[-1])) < -opts.phase1_margin

    z, fz, _, _, bar, _, _ = _run_barrier(aux, aux.w0.copy(), opts, stop=stop)
    w = z[:-1]
    slack = float(prog.values(w)[1:].max())
    return w, slack, bar.newton_steps


def solve_convex(prog, opts=None):
    opts = opts or SolverOptions()
    steps = 0
    try:
        if prog.m:
            w, slack, steps = phase_one(prog, opts)
            if not slack < 0:
                return SolveResult(INFEASIBLE, iterations=steps,
                                   message=f"phase I could not reach strict feasibility (max f = {slack:.3g})")
        else:
            w = _initial_point(prog)
        w, f, grad, tb, bar, outer, _ = _run_barrier(prog, w, opts)
    except _Failure as exc:
        return SolveResult(exc.status, iterations=steps, message=str(exc))
    steps += bar.newton_steps
    gap = bar.m_eff / tb
    primal = float(max(f[1:].max(), 0.0)) if prog.m else 0.0
    # centering error: squared Newton decrement over tb, in the units of the
    # log objective like the gap.  The plain stationarity residual is not
    # usable here: active rows end near f_i = -1e-9, where rounding in the
    # log-sum-exp leaves ~1e-7 relative error in every dual estimate
    kkt = {"duality_gap": gap, "centering": 2.0 * bar.last_decrement / tb,
           "primal_infeasibility": primal}
    status = OPTIMAL if max(kkt.values()) <= opts.tol else NUMERICAL_FAILURE
    return _result(status, prog, w, f, steps, kkt, outer)


def _result(status, prog, w, f, steps, kkt, outer):
    return SolveResult(status, prog.to_physical(w), float(math.exp(f[0])), steps, kkt,
                       [float(math.exp(v)) for v in outer], w=w)


def solve_gp(problem, opts=None):
    """Solve a :class:`GpProblem`; values are returned in physical units."""
    return solve_convex(to_convex(problem), opts)
