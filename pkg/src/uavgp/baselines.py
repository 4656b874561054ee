"""Reference solvers that attack the original non-convex problem directly.

``solve_ga`` is a real-coded genetic algorithm with a static penalty;
``solve_nlp_ipm`` is a log-barrier method on a softmax-smoothed objective.
Both return the planner's :class:`Solution` so results compare one to one.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import kernels
from .channel import G3DB_NUMERATOR, UavPlacement
from .feasibility import max_feasible_sinr, verify_solution
from .planner import Solution

THETA_CAP = math.pi - 1e-3


class BaselineFailure(RuntimeError):
    """No feasible point was found within the budget."""


@dataclass
class GaConfig:
    population: int = 100
    generations: int = 300
    crossover_rate: float = 0.9
    sbx_eta: float = 15.0
    mutation_rate: float = 0.1
    mutation_scale: float = 0.05     # fraction of each gene's range
    elitism: int = 2
    tournament: int = 3
    penalty: float | None = None     # None -> 1e3 * p_max
    seed: int = 0

    def __post_init__(self):
        if self.population < 2 or self.generations < 1:
            raise ValueError("need population >= 2 and generations >= 1")
        for name in ("crossover_rate", "mutation_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if not 0 <= self.elitism < self.population:
            raise ValueError("elitism must be smaller than the population")


@dataclass
class NlpConfig:
    starts: int = 8
    mu0: float = 1e-2                # initial barrier weight
    mu_decay: float = 0.1
    stages: int = 8
    tau0: float = 0.1                # softmax temperature in nats
    tau_decay: float = 0.1
    max_inner: int = 200
    grad_tol: float = 1e-8
    step_tol: float = 1e-12
    seed: int = 0

    def __post_init__(self):
        if min(self.mu0, self.tau0, self.grad_tol, self.step_tol) <= 0:
            raise ValueError("tolerances and schedules must be positive")
        if self.starts < 1 or self.stages < 1 or self.max_inner < 1:
            raise ValueError("starts, stages and max_inner must be >= 1")


def _channel_args(dep, env, cfg):
    return (np.ascontiguousarray(dep.x), np.ascontiguousarray(dep.y),
            np.ascontiguousarray(dep.activation), env.psi, env.beta, env.eta1, env.eta2,
            cfg.kappa, cfg.alpha, cfg.sigma2, cfg.gamma0)


def _gene_bounds(dep, cfg):
    R = max(cfg.R, float(np.max(np.abs(dep.positions))))
    lo = np.array([-R, -R, cfg.h_min, cfg.theta0] + [math.log(cfg.p_min)] * dep.K)
    hi = np.array([R, R, cfg.h_max, THETA_CAP] + [math.log(cfg.p_max)] * dep.K)
    return lo, hi


def _decode(genes):
    return np.ascontiguousarray(genes[:, :4]), np.ascontiguousarray(np.exp(genes[:, 4:]))


def _sbx(a, b, eta, lo, hi, rng):
    u = rng.random(a.shape)
    beta = np.where(u <= 0.5, (2 * u) ** (1 / (eta + 1)), (1 / (2 * (1 - u))) ** (1 / (eta + 1)))
    c1 = 0.5 * ((1 + beta) * a + (1 - beta) * b)
    c2 = 0.5 * ((1 - beta) * a + (1 + beta) * b)
    return np.clip(c1, lo, hi), np.clip(c2, lo, hi)


def solve_ga(dep, env, cfg, ga_cfg=None):
    """Best feasible individual after the generation budget."""
    ga_cfg = ga_cfg or GaConfig()
    start = time.perf_counter()
    rng = np.random.default_rng(ga_cfg.seed)
    lo, hi = _gene_bounds(dep, cfg)
    span = hi - lo
    n = lo.size
    N = ga_cfg.population
    penalty = ga_cfg.penalty if ga_cfg.penalty is not None else 1e3 * cfg.p_max
    args = _channel_args(dep, env, cfg)

    def evaluate(pop):
        obj, viol = kernels.population_fitness(*_decode(pop), *args)
        return obj + penalty * viol, obj, viol

    pop = lo + span * rng.random((N, n))
    fit, obj, viol = evaluate(pop)
    best_hist = []
    best = None
    for _ in range(ga_cfg.generations):
        feas = viol == 0.0
        if feas.any():
            k = int(np.flatnonzero(feas)[np.argmin(obj[feas])])
            if best is None or obj[k] < best[1]:
                best = (pop[k].copy(), float(obj[k]))
        best_hist.append(best[1] if best else math.inf)

        order = np.argsort(fit, kind="stable")
        elite = pop[order[:ga_cfg.elitism]]
        # tournament selection
        cand = rng.integers(0, N, size=(N, ga_cfg.tournament))
        winners = cand[np.arange(N), np.argmin(fit[cand], axis=1)]
        parents = pop[winners]
        kids = parents.copy()
        half = N // 2
        mates_a, mates_b = parents[:half], parents[half:2 * half]
        cross = rng.random(half) < ga_cfg.crossover_rate
        c1, c2 = _sbx(mates_a, mates_b, ga_cfg.sbx_eta, lo, hi, rng)
        kids[:half][cross] = c1[cross]
        kids[half:2 * half][cross] = c2[cross]
        mutate = rng.random(kids.shape) < ga_cfg.mutation_rate
        kids = np.where(mutate, kids + rng.normal(0.0, ga_cfg.mutation_scale, kids.shape) * span, kids)
        kids = np.clip(kids, lo, hi)
        kids[:ga_cfg.elitism] = elite
        pop = kids
        fit, obj, viol = evaluate(pop)

    feas = viol == 0.0
    if feas.any():
        k = int(np.flatnonzero(feas)[np.argmin(obj[feas])])
        if best is None or obj[k] < best[1]:
            best = (pop[k].copy(), float(obj[k]))
    best_hist.append(best[1] if best else math.inf)
    wall = time.perf_counter() - start
    if best is None:
        raise BaselineFailure(f"GA found no feasible individual in {ga_cfg.generations} generations")
    genes = best[0]
    sol = _make_solution("ga", genes[:4], np.exp(genes[4:]), dep, env, cfg, ga_cfg.generations, wall)
    sol.trace = [{"generation": g, "best": v} for g, v in enumerate(best_hist)]
    return sol


def _make_solution(method, place, powers, dep, env, cfg, iterations, wall):
    placement = UavPlacement(*(float(v) for v in place))
    sol = Solution(placement, np.asarray(powers, dtype=float),
                   float(np.max(dep.activation * powers)), method, iterations,
                   walltime=wall, feasibility=max_feasible_sinr(dep, cfg))
    sol.slacks = verify_solution(sol, dep, env, cfg)
    sol.feasible = sol.slacks.feasible
    return sol


# ---------------------------------------------------------------- NLP ----

class _SmoothedBarrier:
    """Barrier objective in z = (x/R, y/R, ln h, ln theta, ln p_1..ln p_K)."""

    def __init__(self, dep, env, cfg):
        self.dep, self.env, self.cfg = dep, env, cfg
        self.R = cfg.R
        self.c = dep.activation
        self.logc = np.log(self.c)

    def unpack(self, Z):
        Z = np.atleast_2d(Z)
        return (Z[:, 0] * self.R, Z[:, 1] * self.R, np.exp(Z[:, 2]), np.exp(Z[:, 3]), np.exp(Z[:, 4:]))

    def constraints(self, Z):
        """Constraint values g(z) <= 0, one row per point."""
        cfg, env, dep = self.cfg, self.env, self.dep
        Z = np.atleast_2d(Z)
        x, y, h, th, p = self.unpack(Z)
        r = np.hypot(dep.x[None, :] - x[:, None], dep.y[None, :] - y[:, None])
        d2 = r * r + h[:, None] ** 2
        elev = np.degrees(np.arctan2(h[:, None], r))
        plos = 1.0 / (1.0 + env.psi * np.exp(-env.beta * (elev - env.psi)))
        g = 1.0 / ((plos * env.eta1 + (1 - plos) * env.eta2) * (cfg.kappa ** 2 * d2) ** (cfg.alpha / 2))
        G = G3DB_NUMERATOR / th ** 2
        rx = self.c[None, :] * p * g
        den = G[:, None] * (rx.sum(axis=1, keepdims=True) - rx) + cfg.sigma2
        sinr = np.log(cfg.gamma0) - np.log(G[:, None] * p * g / den)
        reach = h * np.tan(th / 2)
        foot = (r * r - reach[:, None] ** 2) / self.R ** 2
        lp = Z[:, 4:]
        rows = [sinr, foot,
                math.log(cfg.p_min) - lp, lp - math.log(cfg.p_max),
                (math.log(cfg.h_min) - Z[:, 2])[:, None], (Z[:, 2] - math.log(cfg.h_max))[:, None],
                (math.log(cfg.theta0) - Z[:, 3])[:, None], (Z[:, 3] - math.log(THETA_CAP))[:, None]]
        return np.concatenate(rows, axis=1)

    def objective(self, Z, tau):
        # smoothed max of ln(c_k p_k): same minimizer as max c_k p_k but free
        # of the many decades between p_min and p_max
        v = self.logc[None, :] + np.atleast_2d(Z)[:, 4:]
        vmax = v.max(axis=1)
        return vmax + tau * np.log(np.exp((v - vmax[:, None]) / tau).sum(axis=1))

    def phi(self, Z, mu, tau):
        with np.errstate(all="ignore"):
            g = self.constraints(Z)
            out = self.objective(Z, tau) - mu * np.log(-np.minimum(g, 0.0)).sum(axis=1)
        out[~(np.all(g < 0, axis=1) & np.isfinite(out))] = np.inf
        return out

    def grad(self, z, mu, tau, eps=1e-7):
        n = z.size
        Z = np.repeat(z[None, :], 2 * n, axis=0)
        idx = np.arange(n)
        Z[idx, idx] += eps
        Z[n + idx, idx] -= eps
        f = self.phi(Z, mu, tau)
        return (f[:n] - f[n:]) / (2 * eps)


def _bfgs(fun, grad, z, cfg):
    f = fun(z)
    g = grad(z)
    H = np.eye(z.size)
    for it in range(cfg.max_inner):
        if not np.all(np.isfinite(g)) or np.linalg.norm(g, np.inf) <= cfg.grad_tol:
            break
        d = -H @ g
        if g @ d >= 0:  # lost descent; restart from steepest descent
            H = np.eye(z.size)
            d = -g
        step = 1.0
        while step > cfg.step_tol:
            zn = z + step * d
            fn = fun(zn)
            if np.isfinite(fn) and fn <= f + 1e-4 * step * (g @ d):
                break
            step *= 0.5
        else:
            break
        gn = grad(zn)
        if not np.all(np.isfinite(gn)):
            z, f = zn, fn
            break
        s, yv = zn - z, gn - g
        sy = s @ yv
        if sy > 1e-16:
            rho = 1.0 / sy
            V = np.eye(z.size) - rho * np.outer(s, yv)
            H = V @ H @ V.T + rho * np.outer(s, s)
        z, f, g = zn, fn, gn
    return z, f


def _nlp_starts(dep, cfg, rng, count):
    """Strictly feasible starts: random hover point, covering beam, equal powers."""
    bar_starts = []
    attempts = 0
    while len(bar_starts) < count and attempts < 50 * count:
        attempts += 1
        rad = cfg.R * math.sqrt(rng.random()) * 0.5
        ang = 2 * math.pi * rng.random()
        x, y = rad * math.cos(ang), rad * math.sin(ang)
        h = math.exp(rng.uniform(math.log(cfg.h_min), math.log(cfg.h_max)))
        rmax = float(np.max(np.hypot(dep.x - x, dep.y - y)))
        th = max(cfg.theta0, 2 * math.atan(rmax / h)) * 1.05
        if th >= THETA_CAP:
            continue
        lp = rng.uniform(math.log(cfg.p_min), math.log(cfg.p_max))
        z = np.concatenate([[x / cfg.R, y / cfg.R, math.log(h), math.log(th)], np.full(dep.K, lp)])
        bar_starts.append(z)
    return bar_starts


def solve_nlp_ipm(dep, env, cfg, nlp_cfg=None):
    """Multistart log-barrier method on the smoothed min-max problem."""
    nlp_cfg = nlp_cfg or NlpConfig()
    start = time.perf_counter()
    rng = np.random.default_rng(nlp_cfg.seed)
    model = _SmoothedBarrier(dep, env, cfg)
    best = None
    inner = 0
    for z in _nlp_starts(dep, cfg, rng, 4 * nlp_cfg.starts):
        if inner >= nlp_cfg.starts:
            break
        if not np.all(model.constraints(z) < 0):
            continue
        inner += 1
        mu, tau = nlp_cfg.mu0, nlp_cfg.tau0
        for _ in range(nlp_cfg.stages):
            z, _ = _bfgs(lambda v: float(model.phi(v, mu, tau)[0]),
                         lambda v: model.grad(v, mu, tau), z, nlp_cfg)
            mu *= nlp_cfg.mu_decay
            tau *= nlp_cfg.tau_decay
        x, y, h, th, p = model.unpack(z)
        val = float(np.max(dep.activation * p[0]))
        if best is None or val < best[1]:
            best = (z.copy(), val)
    wall = time.perf_counter() - start
    if best is None:
        raise BaselineFailure("no strictly feasible start found")
    x, y, h, th, p = model.unpack(best[0])
    return _make_solution("nlp_ipm", (x[0], y[0], h[0], th[0]), p[0], dep, env, cfg, nlp_cfg.stages, wall)
