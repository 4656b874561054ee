"""One PASS/FAIL line per acceptance criterion.

Each test records its verdict before asserting, so a failing criterion still
shows its measured numbers in the summary section.
"""
import math
import time

import numpy as np
import pytest

import oracles
from conftest import ACCEPTANCE
from test_gp_core import _fd_grad, gp_from_data
from uavgp.channel import SystemConfig, UavPlacement, get_environment, sinr
from uavgp.cli import main
from uavgp.feasibility import complexity_counts, max_feasible_sinr
from uavgp.gp import solve_gp, to_convex
from uavgp.harness import SweepSpec, mean_by, run_sweep
from uavgp.planner import build_p11, build_p12, build_p13, fit_tan_power, run_algorithm1
from uavgp.scenarios import make_scenario

TIE = 1e-9   # relative tolerance for float ties in ordering checks


def record(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    ACCEPTANCE.append(line)
    return ok


# ---------------------------------------------------------------- 1 ----

def _random_config(rng, cfg):
    K = int(rng.integers(1, 11))
    rad = 20 * np.sqrt(rng.random(K))
    ang = rng.uniform(0, 2 * math.pi, K)
    from uavgp.channel import Deployment
    dep = Deployment(np.column_stack([rad * np.cos(ang), rad * np.sin(ang)]), 0.5 * (1 - rng.random(K)))
    x, y = rng.uniform(-20, 20, 2)
    h = rng.uniform(cfg.h_min, cfg.h_max)
    need = 2 * math.atan(float(np.max(np.hypot(dep.x - x, dep.y - y))) / h)
    th = rng.uniform(max(need, cfg.theta0), math.pi - 1e-3)
    return dep, UavPlacement(x, y, h, th), rng.uniform(cfg.p_min, cfg.p_max, K)


def test_c1_sinr_bound_property():
    cfg = SystemConfig()
    env = get_environment("dense_urban")
    rng = np.random.default_rng(2024)
    tic = time.perf_counter()
    worst, bad = 0.0, 0
    for _ in range(1000):
        dep, pl, p = _random_config(rng, cfg)
        ratio = sinr(pl, dep, env, cfg, p).min() / max_feasible_sinr(dep, cfg).gamma_max_tight
        worst = max(worst, ratio)
        bad += ratio > 1 + 1e-12
    wall = time.perf_counter() - tic
    ok = record(1, bad == 0 and wall < 5, f"violations={bad}/1000 worst_ratio={worst:.3f} time={wall:.2f}s")
    assert ok


# ---------------------------------------------------------------- 2 ----

def test_c2_problem_sizes():
    cfg = SystemConfig()
    env = get_environment("dense_urban")
    tan = fit_tan_power(cfg.theta0, 0.9)
    mismatch = {"P1-1": [], "P1-2": [], "P1-3": []}
    for K in range(1, 101):
        sc = make_scenario(K, seed=K)
        dep = sc.deployment
        built = {"P1-1": build_p11(dep, env, cfg, 0.0, 0.0, tan),
                 "P1-2": build_p12(dep, env, cfg, 300.0, 0.6, 0.0, 0.0),
                 "P1-3": build_p13(dep, env, cfg, UavPlacement(0.0, 0.0, 100.0, 3.0))}
        for sub, prob in built.items():
            cc = complexity_counts(K, sub)
            if (prob.n_variables, prob.n_constraints) != (cc.s, cc.m):
                mismatch[sub].append((K, prob.n_variables, cc.s, prob.n_constraints, cc.m))
    detail = " ".join(f"{s}:{'ok' if not m else f'{len(m)} K mismatched, e.g. K={m[0][0]} vars {m[0][1]} vs {m[0][2]}, cons {m[0][3]} vs {m[0][4]}'}"
                      for s, m in mismatch.items())
    ok = record(2, not any(mismatch.values()), detail)
    assert ok


# ---------------------------------------------------------------- 3, 4 ----

@pytest.fixture(scope="module")
def hundred_runs():
    out = []
    for i in range(100):
        K = (10, 25, 50)[i % 3]
        sc = make_scenario(K, seed=i)
        out.append((sc, run_algorithm1(sc.deployment, sc.env, sc.cfg)))
    return out


@pytest.mark.slow
def test_c3_original_problem_feasibility(hundred_runs):
    slack = [s.slacks.to_dict()["min_relative_slack"] for _, s in hundred_runs]
    bad = sum(v < -1e-6 or not s.feasible for v, (_, s) in zip(slack, hundred_runs))
    ok = record(3, bad == 0, f"failures={bad}/100 min_relative_slack={min(slack):.3e}")
    assert ok


@pytest.mark.slow
def test_c4_monotone_and_fast_convergence(hundred_runs):
    nonmono = 0
    iters = []
    for _, s in hundred_runs:
        ts = [tr["t"] for tr in s.trace]
        nonmono += any(b > a + 1e-9 * abs(a) for a, b in zip(ts, ts[1:]))
        iters.append(s.iterations)
    med = float(np.median(iters))
    ok = record(4, nonmono == 0 and max(iters) <= 10 and med <= 5,
                f"non_monotone={nonmono} max_iters={max(iters)} median_iters={med:g}")
    assert ok


# ---------------------------------------------------------------- 5 ----

@pytest.mark.slow
def test_c5_small_instance_oracle_gap():
    ratios, walls = [], []
    below = 0
    for seed in range(20):
        sc = make_scenario(3, R=5.0, seed=seed)
        cfg = sc.cfg
        tic = time.perf_counter()
        sol = run_algorithm1(sc.deployment, sc.env, cfg)
        walls.append(time.perf_counter() - tic)
        ref, _ = oracles.p1_grid_oracle(sc.deployment.positions.tolist(), sc.deployment.activation,
                                        sc.env.to_dict(),
                                        {k: getattr(cfg, k) for k in ("fc", "alpha", "sigma2", "gamma0", "p_min",
                                                                      "p_max", "h_min", "h_max", "theta0", "R")})
        ratios.append(sol.objective / ref)
        below += sol.objective < ref * (1 - TIE)
    ok = record(5, below == 0 and max(ratios) <= 1.25 and max(walls) < 60,
                f"ratio min={min(ratios):.6f} max={max(ratios):.6f} below_oracle={below} max_time={max(walls):.2f}s")
    assert ok


# ---------------------------------------------------------------- 6 ----

FAILED_ROWS = []


def _means(param, values, base):
    rows = run_sweep(SweepSpec(param, values, list(range(20)), ["alg1"], ["random"], base))
    # means skip failed rows, so count them for the report
    FAILED_ROWS.extend(r for r in rows if not r.feasible)
    return [mean_by(rows, "alg1", v) for v in values], [mean_by(rows, "alg1", v, "h_m") for v in values]


@pytest.mark.slow
def test_c6_trends():
    parts = {}
    obj, _ = _means("K", [5, 10, 20, 40], {})
    parts["a"] = (all(b > a for a, b in zip(obj, obj[1:])), "K " + " < ".join(f"{v:.4e}" for v in obj))
    obj, _ = _means("gamma0_db", [-20.0, -18.0, -16.0], {"K": 25})
    strict = all(b > a for a, b in zip(obj, obj[1:]))
    weak = all(b >= a for a, b in zip(obj, obj[1:]))
    parts["b"] = (weak, f"gamma0 {obj[0]:.4e},{obj[1]:.4e},{obj[2]:.4e} strict={strict}")
    obj, hs = _means("R", [10.0, 40.0], {"K": 25})
    parts["c"] = (obj[1] > obj[0] and hs[1] > hs[0],
                  f"R obj {obj[0]:.4e}->{obj[1]:.4e} h {hs[0]:.1f}->{hs[1]:.1f}")
    obj, _ = _means("environment", ["suburban", "highrise"], {"K": 25})
    parts["d"] = (obj[1] > obj[0], f"suburban {obj[0]:.4e} highrise {obj[1]:.4e}")
    ok = all(v for v, _ in parts.values()) and not FAILED_ROWS
    record(6, ok, " | ".join(f"({k}) {'ok' if v else 'no'} {d}" for k, (v, d) in parts.items())
           + f" | failed rows {len(FAILED_ROWS)}")
    assert ok


# ---------------------------------------------------------------- 7 ----

@pytest.mark.slow
def test_c7_method_ordering():
    rows = run_sweep(SweepSpec("K", [25], list(range(20)), ["alg1", "ga"], ["random"], {}))
    by = {(r.method, r.seed): r for r in rows}
    wins = sum(by["alg1", s].feasible and by["ga", s].feasible
               and by["alg1", s].objective_w <= by["ga", s].objective_w * (1 + TIE) for s in range(20))
    timing = run_sweep(SweepSpec("K", [10, 25, 50], list(range(5)), ["alg1", "ga"], ["random"], {}),
                       record_time=True)
    faster = {}
    for K in (10, 25, 50):
        faster[K] = (mean_by(timing, "alg1", K, "walltime_s"), mean_by(timing, "ga", K, "walltime_s"))
    ok = wins >= 16 and all(a < g for a, g in faster.values())
    record(7, ok, f"alg1<=ga on {wins}/20; mean time alg1/ga " +
           " ".join(f"K={K}:{a:.3f}/{g:.3f}s" for K, (a, g) in faster.items()))
    assert ok


# ---------------------------------------------------------------- 8 ----

def test_c8_gp_solver_against_grid_and_fd():
    rng = np.random.default_rng(88)
    errs, grad_err = [], 0.0
    for i in range(50):
        n = 1 + i % 5
        data = oracles.random_gp_data(rng, n)
        gp = gp_from_data(data)
        res = solve_gp(gp)
        best, _ = oracles.gp_grid_optimum(data, refine=8)
        errs.append(abs(res.objective - best) / best if res.ok else math.inf)
        prog = to_convex(gp)
        for _ in range(100):
            w = prog.w0 + rng.normal(scale=0.5, size=prog.n)
            for k in range(prog.m + 1):
                grad_err = max(grad_err, float(np.max(np.abs(prog.gradient(k, w) - _fd_grad(prog, k, w)))))
    ok = record(8, max(errs) <= 0.01 and grad_err <= 1e-6,
                f"max_rel_obj_err={max(errs):.2e} max_grad_err={grad_err:.2e}")
    assert ok


# ---------------------------------------------------------------- 9 ----

def test_c9_sweep_is_byte_identical(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text('{"param": "K", "values": [4, 8], "repetitions": 3, "methods": ["alg1", "ga"]}')
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    codes = (main(["sweep", str(spec), "--out", str(a)]), main(["sweep", str(spec), "--out", str(b)]))
    same = a.read_bytes() == b.read_bytes()
    ok = record(9, codes == (0, 0) and same, f"exit={codes} bytes={len(a.read_bytes())} identical={same}")
    assert ok


@pytest.mark.slow
def test_final_lp_never_raises_objective(hundred_runs):
    # not a numbered criterion: the planner invariant checked on the same runs
    worse = [s.objective / s.trace[-1]["t"] for _, s in hundred_runs
             if s.objective > s.trace[-1]["t"] * (1 + TIE)]
    assert not worse


@pytest.mark.slow
def test_planner_time_grows_subquadratically():
    Ks = [10, 20, 30, 40, 50]
    times = []
    for K in Ks:
        sc = make_scenario(K, seed=0)
        run_algorithm1(sc.deployment, sc.env, sc.cfg)   # warm caches
        best = math.inf
        for _ in range(2):
            tic = time.perf_counter()
            run_algorithm1(sc.deployment, sc.env, sc.cfg)
            best = min(best, time.perf_counter() - tic)
        times.append(best)
    slope = np.polyfit(np.log(Ks), np.log(times), 1)[0]
    print(f"log-log slope of wall time in K: {slope:.2f}")
    assert slope < 2
