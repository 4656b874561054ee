#!/usr/bin/env python3
"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py --K 10 25 50 --repeat 20

Prints one line per (kernel, K) with the median time of each backend and the
speed-up; also checks that both backends agree.
"""
import argparse
import math
import time

import numpy as np

from uavgp import kernels
from uavgp.baselines import _channel_args, _decode, _gene_bounds
from uavgp.gp import to_convex
from uavgp.planner import build_p12, centroid_init
from uavgp.scenarios import make_scenario


def _median_time(fn, repeat):
    fn()  # warm-up (and JIT compile)
    ts = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        ts.append(time.perf_counter() - t0)
    return float(np.median(ts))


def bench_derivs(K, repeat):
    sc = make_scenario(K, seed=0)
    dep, env, cfg = sc.deployment, sc.env, sc.cfg
    x, y = centroid_init(dep)
    rmax = float(np.max(np.hypot(dep.x - x, dep.y - y)))
    h = 300.0
    prog = to_convex(build_p12(dep, env, cfg, h, max(2 * math.atan(rmax / h), cfg.theta0), x, y))
    rng = np.random.default_rng(0)
    w = prog.w0 + 0.01 * rng.standard_normal(prog.n)
    cterm = rng.random(prog.m + 1)
    couter = rng.random(prog.m + 1)
    dense = prog.dense_rows()
    args = (prog.indptr, prog.indices, prog.data, prog.b, prog.seg, w, cterm, couter)
    t_nb = _median_time(lambda: kernels.lse_derivs_numba(*args), repeat)
    t_np = _median_time(lambda: kernels.lse_derivs_numpy(*args, dense=dense), repeat)
    g1, H1 = kernels.lse_derivs_numba(*args)
    g2, H2 = kernels.lse_derivs_numpy(*args, dense=dense)
    err = max(np.abs(g1 - g2).max() / max(1.0, np.abs(g2).max()), np.abs(H1 - H2).max() / max(1.0, np.abs(H2).max()))
    return t_nb, t_np, err


def bench_fitness(K, repeat, population=100):
    sc = make_scenario(K, seed=0)
    dep, env, cfg = sc.deployment, sc.env, sc.cfg
    lo, hi = _gene_bounds(dep, cfg)
    pop = lo + (hi - lo) * np.random.default_rng(0).random((population, lo.size))
    place, powers = _decode(pop)
    args = (place, powers) + _channel_args(dep, env, cfg)
    t_nb = _median_time(lambda: kernels.population_fitness_numba(*args), repeat)
    t_np = _median_time(lambda: kernels.population_fitness_numpy(*args), repeat)
    o1, v1 = kernels.population_fitness_numba(*args)
    o2, v2 = kernels.population_fitness_numpy(*args)
    err = max(np.abs(o1 - o2).max() / np.abs(o2).max(), np.abs(v1 - v2).max() / max(1.0, np.abs(v2).max()))
    return t_nb, t_np, err


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--K", type=int, nargs="+", default=[10, 25, 50])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)
    print(f"{'kernel':<20}{'K':>4}{'numba [ms]':>12}{'numpy [ms]':>12}{'speed-up':>10}{'max rel diff':>14}")
    for name, fn in (("lse_derivs", bench_derivs), ("population_fitness", bench_fitness)):
        for K in args.K:
            t_nb, t_np, err = fn(K, args.repeat)
            print(f"{name:<20}{K:>4}{1e3 * t_nb:>12.3f}{1e3 * t_np:>12.3f}{t_np / t_nb:>10.1f}{err:>14.2e}")


if __name__ == "__main__":
    main()
