"""Alternating GP planner for UAV placement, beamwidth and device powers.

One outer iteration solves the height/beamwidth GP at a fixed hover point,
snaps the beamwidth onto the exact footprint edge, then solves the position GP
at the fixed height and beamwidth.  A final LP re-optimizes the powers with
the exact average gains.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .channel import (G3DB_NUMERATOR, UavPlacement, avg_gains, gain_bound_delta,
                      ground_distances)
from .feasibility import InfeasibleTargetError, max_feasible_sinr, verify_solution
from .gp import GpProblem, Monomial, Posynomial, SolverOptions, solve_gp, solve_lp


class PlannerError(RuntimeError):
    """A sub-problem failed; ``stage`` names it and ``iteration`` says when."""

    def __init__(self, stage, iteration, result):
        self.stage = stage
        self.iteration = iteration
        self.result = result
        super().__init__(f"{stage} failed at iteration {iteration}: {result.status} ({result.message})")


@dataclass
class TanFit:
    q1: float
    q2: float
    lo: float
    hi: float
    max_rel_err: float

    def __call__(self, theta):
        return self.q1 * np.asarray(theta, dtype=float) ** self.q2


def fit_tan_power(theta_lo, theta_hi, samples=200):
    """Least-squares fit of ``tan(theta/2) ~ q1 * theta**q2`` in log space."""
    if not 0 < theta_lo < theta_hi < math.pi or samples < 2:
        raise ValueError(f"degenerate fit range [{theta_lo}, {theta_hi}] with {samples} samples")
    th = np.linspace(theta_lo, theta_hi, int(samples))
    q2, lnq1 = np.polyfit(np.log(th), np.log(np.tan(th / 2)), 1)
    q1 = math.exp(lnq1)
    scan = np.linspace(theta_lo, theta_hi, 2001)
    exact = np.tan(scan / 2)
    err = float(np.max(np.abs(q1 * scan ** q2 - exact) / exact))
    return TanFit(q1, float(q2), float(theta_lo), float(theta_hi), err)


def default_tan_fit(dep, cfg, x0, y0, samples=200):
    rmax = float(np.max(np.hypot(dep.x - x0, dep.y - y0)))
    hi = 2.0 * math.atan(rmax / cfg.h_min)
    # devices packed under the UAV: keep a usable range above theta0
    hi = min(max(hi, 2.0 * cfg.theta0), 0.5 * (cfg.theta0 + math.pi))
    return fit_tan_power(cfg.theta0, hi, samples)


def centroid_init(dep):
    w = dep.activation
    return float(np.dot(w, dep.x) / w.sum()), float(np.dot(w, dep.y) / w.sum())


@dataclass
class PlannerOptions:
    xi: float | None = None          # stopping threshold in W; None -> 1e-5 * p_max
    max_iter: int = 50
    amgm: str = "adaptive"           # weights of the |x_k - x_uav| condensation
    tan_samples: int = 200
    enforce_h_max: bool = True
    check_feasibility: bool = True
    solver: SolverOptions = field(default_factory=SolverOptions)


# ---------------------------------------------------------------- P1-1 ----

def build_p11(dep, env, cfg, x_uav, y_uav, tanfit, p_init=None, h_init=None, enforce_h_max=True):
    """Height, beamwidth and power GP at a fixed hover point."""
    K = dep.K
    a2 = cfg.alpha / 2
    r = np.maximum(np.hypot(dep.x - x_uav, dep.y - y_uav), 1e-6 * cfg.R)
    rmax = float(r.max())
    delta = gain_bound_delta(env, cfg)
    c = dep.activation.tolist()
    rl = r.tolist()

    theta_i = 1.5 * cfg.theta0
    h_need = rmax / float(tanfit(theta_i))
    h0 = h_init or min(max(1.2 * h_need, 1.2 * cfg.h_min), 0.9 * cfg.h_max)
    p0 = np.full(K, 0.5 * cfg.p_max) if p_init is None else np.clip(p_init, 1.01 * cfg.p_min, 0.99 * cfg.p_max)
    g0 = avg_gains(UavPlacement(x_uav, y_uav, h0, theta_i), dep, env, cfg)

    gp = GpProblem()
    h = gp.add_variable("h", h0, upper=cfg.h_max if enforce_h_max else math.inf, scale=cfg.h_min)
    th = gp.add_variable("theta_b", theta_i, upper=math.pi, scale=cfg.theta0)
    tscale = max(c) * cfg.p_max
    t = gp.add_variable("t", 1.01 * float(np.max(dep.activation * p0)), scale=tscale)
    p = [gp.add_variable(f"p{k}", p0[k], scale=cfg.p_max) for k in range(K)]
    u = [gp.add_variable(f"u{k}", 1.0 / g0[k], scale=1.0 / g0[k]) for k in range(K)]
    gp.minimize(t)

    for i in range(K):
        gp.add_constraint(c[i] * p[i] / t, f"epigraph[{i}]")
    for i in range(K):
        gp.add_constraint(cfg.p_min / p[i], f"p_min[{i}]")
    for i in range(K):
        gp.add_constraint(p[i] / cfg.p_max, f"p_max[{i}]")
    gp.add_constraint(cfg.h_min / h, "h_min")
    gp.add_constraint(cfg.theta0 / th, "theta0")
    gp.add_constraint(rmax / tanfit.q1 / h * th ** (-tanfit.q2), "footprint")
    noise = cfg.gamma0 * cfg.sigma2 / G3DB_NUMERATOR
    for i in range(K):
        # built term by term: K^2 monomials overall
        terms = [Monomial(cfg.gamma0 * delta * c[j] * rl[j] ** (-a2),
                          {"h": -a2, f"p{j}": 1.0, f"u{i}": 1.0, f"p{i}": -1.0})
                 for j in range(K) if j != i]
        terms.append(Monomial(noise, {"theta_b": 2.0, f"u{i}": 1.0, f"p{i}": -1.0}))
        gp.add_constraint(Posynomial(terms), f"sinr[{i}]")
    for i in range(K):
        gp.add_constraint(rl[i] ** a2 / delta / u[i] * h ** a2, f"gain[{i}]")
    return gp


def omega_p11(values, dep, env, cfg, x_uav, y_uav, i):
    """Direct evaluation of the SINR surrogate of device ``i`` in the height GP."""
    a2 = cfg.alpha / 2
    r = np.maximum(np.hypot(dep.x - x_uav, dep.y - y_uav), 1e-6 * cfg.R)
    delta = gain_bound_delta(env, cfg)
    p = np.array([values[f"p{k}"] for k in range(dep.K)])
    ui, h, th = values[f"u{i}"], values["h"], values["theta_b"]
    mask = np.arange(dep.K) != i
    interf = cfg.gamma0 * delta * h ** (-a2) * ui / p[i] * np.sum((dep.activation * p * r ** (-a2))[mask])
    return interf + cfg.gamma0 * cfg.sigma2 * th ** 2 / G3DB_NUMERATOR * ui / p[i]


# ---------------------------------------------------------------- P1-2 ----

def origin_shift(dep, cfg):
    """Translation making every device coordinate at least R/100."""
    floor = cfg.R / 100.0
    return floor - float(dep.x.min()), floor - float(dep.y.min())


def _abs_weights(coord, uav, dt, mode):
    # weights a (for dt + uav >= coord) and b (for dt + coord >= uav)
    if mode == "paper":
        return 0.5, 0.5
    return dt / (dt + uav), dt / (dt + coord)


def build_p12(dep, env, cfg, h, theta_b, x_uav, y_uav, p_init=None, amgm="adaptive"):
    """Position and power GP at fixed height and beamwidth.

    ``x_uav, y_uav`` is the current hover point in the original frame; it
    seeds the initial values and, with ``amgm="adaptive"``, the weights of
    the absolute-value condensation.
    """
    if amgm not in ("paper", "adaptive"):
        raise ValueError(f"unknown amgm mode {amgm!r}")
    K = dep.K
    a2, a4 = cfg.alpha / 2, cfg.alpha / 4
    sx, sy = origin_shift(dep, cfg)
    xs, ys = dep.x + sx, dep.y + sy
    floor = 1e-6 * cfg.R
    X0 = max(float(x_uav) + sx, floor)
    Y0 = max(float(y_uav) + sy, floor)
    dx0 = np.maximum(np.abs(xs - X0), floor)
    dy0 = np.maximum(np.abs(ys - Y0), floor)
    delta = gain_bound_delta(env, cfg)
    c = dep.activation.tolist()
    reach = h * math.tan(theta_b / 2)

    p0 = np.full(K, 0.5 * cfg.p_max) if p_init is None else np.clip(p_init, 1.01 * cfg.p_min, 0.99 * cfg.p_max)
    u0 = (2 * dx0 * dy0) ** a4 * h ** a2 / delta

    gp = GpProblem()
    X = gp.add_variable("x_uav", X0, scale=cfg.R)
    Y = gp.add_variable("y_uav", Y0, scale=cfg.R)
    xt = [gp.add_variable(f"xt{k}", dx0[k], lower=floor, scale=cfg.R) for k in range(K)]
    yt = [gp.add_variable(f"yt{k}", dy0[k], lower=floor, scale=cfg.R) for k in range(K)]
    p = [gp.add_variable(f"p{k}", p0[k], scale=cfg.p_max) for k in range(K)]
    u = [gp.add_variable(f"u{k}", u0[k], scale=u0[k]) for k in range(K)]
    t = gp.add_variable("t", 1.01 * float(np.max(dep.activation * p0)), scale=max(c) * cfg.p_max)
    gp.minimize(t)

    for i in range(K):
        gp.add_constraint(c[i] * p[i] / t, f"epigraph[{i}]")
    for i in range(K):
        gp.add_constraint(cfg.p_min / p[i], f"p_min[{i}]")
    for i in range(K):
        gp.add_constraint(p[i] / cfg.p_max, f"p_max[{i}]")
    for i in range(K):
        gp.add_constraint(xt[i] ** 2 / reach ** 2 + yt[i] ** 2 / reach ** 2, f"footprint[{i}]")
    for name, coords, uav0, d0, U, dt in (("x", xs.tolist(), X0, dx0.tolist(), X, xt),
                                          ("y", ys.tolist(), Y0, dy0.tolist(), Y, yt)):
        for i in range(K):
            a, _ = _abs_weights(coords[i], uav0, d0[i], amgm)
            gp.add_constraint(coords[i] * (dt[i] / a) ** (-a) * (U / (1 - a)) ** (a - 1), f"abs_{name}_lo[{i}]")
        for i in range(K):
            _, b = _abs_weights(coords[i], uav0, d0[i], amgm)
            gp.add_constraint(U * (dt[i] / b) ** (-b) * (1 - b) ** (1 - b) * coords[i] ** (b - 1),
                              f"abs_{name}_hi[{i}]")
    noise = cfg.gamma0 * cfg.sigma2 * theta_b ** 2 / G3DB_NUMERATOR
    coef = cfg.gamma0 * delta * h ** (-a2) * 2.0 ** (-a4)
    for i in range(K):
        terms = [Monomial(coef * c[j], {f"xt{j}": -a4, f"yt{j}": -a4, f"p{j}": 1.0,
                                        f"u{i}": 1.0, f"p{i}": -1.0})
                 for j in range(K) if j != i]
        terms.append(Monomial(noise, {f"u{i}": 1.0, f"p{i}": -1.0}))
        gp.add_constraint(Posynomial(terms), f"sinr[{i}]")
    for i in range(K):
        gp.add_constraint((2 * xt[i] * yt[i]) ** a4 / u[i] * h ** a2 / delta, f"gain[{i}]")
    gp.shift = (sx, sy)
    return gp


# ---------------------------------------------------------------- P1-3 ----

@dataclass
class LpProblem:
    """``minimize c.z`` subject to ``A z <= b`` with ``z = (p / p_max, t / p_max)``."""
    c: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray
    names: list
    p_max: float

    @property
    def n_variables(self):
        return self.A_ub.shape[1]

    @property
    def n_constraints(self):
        return self.A_ub.shape[0]


def build_p13(dep, env, cfg, placement):
    """Exact-gain power LP at a fixed placement, in units of ``p_max``.

    The SINR rows are divided by ``G * g_i * p_max`` so every coefficient is
    of order one.
    """
    from .channel import OutsideMainLobeError
    r = ground_distances(placement, dep)
    reach = placement.h * math.tan(placement.theta_b / 2)
    out = np.nonzero(r > reach * (1 + 1e-9))[0]
    if out.size:
        raise OutsideMainLobeError(int(out[0]), float(r[out[0]]), reach)
    K = dep.K
    c = dep.activation
    G = G3DB_NUMERATOR / placement.theta_b ** 2
    g = avg_gains(placement, dep, env, cfg)
    eye = np.eye(K)
    A = np.zeros((4 * K, K + 1))
    b = np.zeros(4 * K)
    A[:K, :K] = np.diag(c)
    A[:K, K] = -1.0
    A[K:2 * K, :K] = eye
    b[K:2 * K] = 1.0
    A[2 * K:3 * K, :K] = -eye
    b[2 * K:3 * K] = -cfg.p_min / cfg.p_max
    ratio = cfg.gamma0 * (c * g)[None, :] / g[:, None]
    ratio[np.diag_indices(K)] = 0.0
    A[3 * K:, :K] = ratio - eye
    b[3 * K:] = -cfg.gamma0 * cfg.sigma2 / (G * g * cfg.p_max)
    obj = np.zeros(K + 1)
    obj[K] = 1.0
    names = [f"p{k}" for k in range(K)] + ["t"]
    return LpProblem(obj, A, b, names, cfg.p_max)


def solve_p13(lp, tol=1e-10):
    res = solve_lp(lp.c, lp.A_ub, lp.b_ub, names=lp.names, tol=tol)
    if res.ok:
        z = np.asarray(res.w) * lp.p_max
        res.values = dict(zip(lp.names, z.tolist()))
        res.objective = float(z[-1])
    return res


# ------------------------------------------------------------ solution ----

@dataclass
class Solution:
    placement: UavPlacement
    powers: np.ndarray
    objective: float
    method: str = "alg1"
    iterations: int = 0
    trace: list = field(default_factory=list)
    stage_times: dict = field(default_factory=dict)
    walltime: float = 0.0
    tanfit: TanFit | None = None
    feasibility: object = None
    slacks: object = None
    feasible: bool = True
    message: str = ""

    def to_dict(self):
        return {
            "method": self.method,
            "feasible": self.feasible,
            "objective_w": self.objective,
            "placement": asdict(self.placement),
            "powers_w": np.asarray(self.powers).tolist(),
            "iterations": self.iterations,
            "trace": self.trace,
            "stage_times_s": self.stage_times,
            "walltime_s": self.walltime,
            "tan_fit": asdict(self.tanfit) if self.tanfit else None,
            "feasibility": self.feasibility.to_dict() if self.feasibility else None,
            "slacks": self.slacks.to_dict() if self.slacks else None,
            "message": self.message,
        }


def _powers(values, K):
    return np.array([values[f"p{k}"] for k in range(K)])


def run_algorithm1(dep, env, cfg, opts=None):
    """Alternate the height GP and the position GP, then refine powers by LP."""
    opts = opts or PlannerOptions()
    start = time.perf_counter()
    report = max_feasible_sinr(dep, cfg)
    if opts.check_feasibility and not report.feasible:
        raise InfeasibleTargetError(report)
    xi = opts.xi if opts.xi is not None else 1e-5 * cfg.p_max
    K = dep.K
    x, y = centroid_init(dep)
    tanfit = default_tan_fit(dep, cfg, x, y, opts.tan_samples)
    times = {"p11": 0.0, "p12": 0.0, "p13": 0.0}
    trace = []
    t_prev = math.inf
    p = None
    h = theta = None
    it = 0
    while it < opts.max_iter:
        it += 1
        tic = time.perf_counter()
        gp = build_p11(dep, env, cfg, x, y, tanfit, p_init=p, enforce_h_max=opts.enforce_h_max)
        res1 = solve_gp(gp, opts.solver)
        times["p11"] += time.perf_counter() - tic
        if not res1.ok:
            raise PlannerError("P1-1", it, res1)
        h = res1.values["h"]
        theta_fit = res1.values["theta_b"]
        rmax = float(np.max(np.hypot(dep.x - x, dep.y - y)))
        theta = max(2.0 * math.atan(rmax / h), cfg.theta0)

        tic = time.perf_counter()
        gp2 = build_p12(dep, env, cfg, h, theta, x, y, p_init=_powers(res1.values, K), amgm=opts.amgm)
        res2 = solve_gp(gp2, opts.solver)
        times["p12"] += time.perf_counter() - tic
        if not res2.ok:
            raise PlannerError("P1-2", it, res2)
        sx, sy = gp2.shift
        x, y = res2.values["x_uav"] - sx, res2.values["y_uav"] - sy
        p = _powers(res2.values, K)
        t = res2.values["t"]
        trace.append({"iteration": it, "t_p11": res1.values["t"], "t": t, "h": h,
                      "theta_fit": theta_fit, "theta_b": theta, "x": x, "y": y,
                      "newton_p11": res1.iterations, "newton_p12": res2.iterations})
        if t_prev - t <= xi:
            break
        t_prev = t

    placement = UavPlacement(x, y, h, theta)
    tic = time.perf_counter()
    res3 = solve_p13(build_p13(dep, env, cfg, placement))
    times["p13"] = time.perf_counter() - tic
    if not res3.ok:
        raise PlannerError("P1-3", it, res3)
    powers = _powers(res3.values, K)
    sol = Solution(placement, powers, float(np.max(dep.activation * powers)), "alg1", it, trace,
                   times, time.perf_counter() - start, tanfit, report)
    sol.slacks = verify_solution(sol, dep, env, cfg)
    sol.feasible = sol.slacks.feasible
    return sol
