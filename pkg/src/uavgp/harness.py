"""Parameter sweeps and timing benchmarks that emit flat CSV files."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .baselines import BaselineFailure, GaConfig, NlpConfig, solve_ga, solve_nlp_ipm
from .feasibility import InfeasibleTargetError
from .gp import SolverOptions
from .planner import PlannerError, PlannerOptions, run_algorithm1
from .scenarios import KINDS, make_scenario

METHODS = ("alg1", "ga", "nlp_ipm")
PARAMS = ("gamma0_db", "K", "R", "environment")
CSV_HEADER = ["method", "kind", "param", "value", "seed", "objective_w", "h_m", "theta_b_rad",
              "iters", "walltime_s", "feasible"]
BENCH_HEADER = ["method", "K", "runs", "mean_walltime_s", "mean_objective_w", "feasible_fraction"]


class SpecError(ValueError):
    """Sweep or bench specification is invalid."""


@dataclass
class SweepSpec:
    param: str
    values: list
    seeds: list = field(default_factory=lambda: list(range(20)))
    methods: list = field(default_factory=lambda: ["alg1"])
    kinds: list = field(default_factory=lambda: ["random"])
    base: dict = field(default_factory=dict)   # K, R, env, gamma0_db and config overrides

    def __post_init__(self):
        if self.param not in PARAMS:
            raise SpecError(f"unknown sweep parameter {self.param!r}; choose from {PARAMS}")
        if not self.values:
            raise SpecError("empty value list")
        if not self.seeds:
            raise SpecError("need at least one seed")
        if not self.methods or any(m not in METHODS for m in self.methods):
            raise SpecError(f"methods must be a non-empty subset of {METHODS}")
        if not self.kinds or any(k not in KINDS for k in self.kinds):
            raise SpecError(f"kinds must be a non-empty subset of {KINDS}")

    @classmethod
    def from_dict(cls, d, seed=None):
        try:
            if "seeds" in d:
                seeds = [int(s) for s in d["seeds"]]
            else:
                reps = int(d.get("repetitions", 20))
                if reps < 1:
                    raise SpecError("repetitions must be >= 1")
                first = int(d.get("seed", 0) if seed is None else seed)
                seeds = list(range(first, first + reps))
            return cls(d["param"], list(d["values"]), seeds, list(d.get("methods", ["alg1"])),
                       list(d.get("kinds", ["random"])), dict(d.get("base", {})))
        except (KeyError, TypeError) as exc:
            raise SpecError(f"malformed sweep spec: {exc}") from exc

    def points(self):
        for value in self.values:
            for seed in self.seeds:
                for kind in self.kinds:
                    for method in self.methods:
                        yield method, kind, value, seed


@dataclass
class SweepRow:
    method: str
    kind: str
    param: str
    value: object
    seed: int
    objective_w: float | None
    h_m: float | None
    theta_b_rad: float | None
    iters: int | None
    walltime_s: float | None
    feasible: bool

    def cells(self):
        def num(v):
            return "" if v is None else repr(float(v))
        return [self.method, self.kind, self.param, _fmt_value(self.value), str(self.seed),
                num(self.objective_w), num(self.h_m), num(self.theta_b_rad),
                "" if self.iters is None else str(self.iters), num(self.walltime_s),
                "1" if self.feasible else "0"]

    @classmethod
    def from_cells(cls, cells):
        def num(s):
            return None if s == "" else float(s)
        method, kind, param, value, seed, obj, h, th, iters, wall, feas = cells
        return cls(method, kind, param, _parse_value(param, value), int(seed), num(obj), num(h), num(th),
                   None if iters == "" else int(iters), num(wall), feas == "1")


def _fmt_value(v):
    return v if isinstance(v, str) else repr(float(v)) if not float(v).is_integer() else str(int(v))


def _parse_value(param, s):
    if param == "environment":
        return s
    v = float(s)
    return int(v) if param == "K" else v


def _sort_key(row):
    v = row.value
    return (isinstance(v, str), v if isinstance(v, str) else float(v), row.seed, row.method, row.kind)


def scenario_for(param, value, seed, kind, base):
    base = dict(base)
    K = int(base.pop("K", 25))
    R = float(base.pop("R", 20.0))
    env = base.pop("env", "dense_urban")
    if param == "K":
        K = int(value)
    elif param == "R":
        R = float(value)
    elif param == "environment":
        env = value
    elif param == "gamma0_db":
        base["gamma0_db"] = float(value)
    return make_scenario(K, R=R, seed=seed, kind=kind, env=env, **base)


def solve_with(method, scenario, seed=0, tol=None, check=True):
    dep, env, cfg = scenario.deployment, scenario.env, scenario.cfg
    if method == "alg1":
        solver = SolverOptions() if tol is None else SolverOptions(tol=tol)
        return run_algorithm1(dep, env, cfg, PlannerOptions(solver=solver, check_feasibility=check))
    if method == "ga":
        return solve_ga(dep, env, cfg, GaConfig(seed=seed))
    if method == "nlp_ipm":
        return solve_nlp_ipm(dep, env, cfg, NlpConfig(seed=seed))
    raise SpecError(f"unknown method {method!r}")


def run_point(args):
    method, kind, param, value, seed, base, tol, record_time = args
    scenario = scenario_for(param, value, seed, kind, base)
    tic = time.perf_counter()
    try:
        sol = solve_with(method, scenario, seed, tol)
    except (PlannerError, BaselineFailure, InfeasibleTargetError, ArithmeticError, ValueError):
        wall = time.perf_counter() - tic
        return SweepRow(method, kind, param, value, seed, None, None, None, None,
                        wall if record_time else None, False)
    wall = time.perf_counter() - tic
    ok = bool(sol.feasible)
    return SweepRow(method, kind, param, value, seed, sol.objective if ok else None,
                    sol.placement.h, sol.placement.theta_b, sol.iterations,
                    wall if record_time else None, ok)


def _map(fn, jobs, threads):
    if threads and threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * threads))))
    return [fn(j) for j in jobs]


def run_sweep(spec, threads=1, tol=None, record_time=False):
    """All rows of a sweep, sorted by (value, seed, method)."""
    jobs = [(m, k, spec.param, v, s, spec.base, tol, record_time) for m, k, v, s in spec.points()]
    rows = _map(run_point, jobs, threads)
    return sorted(rows, key=_sort_key)


def rows_to_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for row in rows:
        w.writerow(row.cells())
    return buf.getvalue()


def rows_from_csv(text):
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != CSV_HEADER:
        raise SpecError(f"unexpected CSV header {header}")
    return [SweepRow.from_cells(cells) for cells in reader]


def load_spec(path, seed=None):
    with open(path, encoding="utf-8") as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SpecError(f"invalid JSON: {exc}") from exc
    if not isinstance(d, dict):
        raise SpecError("sweep spec must be a JSON object")
    return SweepSpec.from_dict(d, seed)


def run_bench(K_list, methods, seeds, base=None, threads=1, tol=None):
    """Mean wall time and objective per (method, K)."""
    if not methods or any(m not in METHODS for m in methods):
        raise SpecError(f"methods must be a non-empty subset of {METHODS}")
    if not K_list or any(int(K) < 1 for K in K_list):
        raise SpecError("K list must be non-empty with K >= 1")
    spec = SweepSpec("K", [int(K) for K in K_list], list(seeds), list(methods), ["random"], dict(base or {}))
    # timing runs stay sequential so jobs do not compete for cores
    rows = run_sweep(spec, threads=1, tol=tol, record_time=True)
    out = []
    for method in methods:
        for K in spec.values:
            sel = [r for r in rows if r.method == method and r.value == K]
            objs = [r.objective_w for r in sel if r.feasible]
            out.append([method, str(K), str(len(sel)),
                        repr(float(np.mean([r.walltime_s for r in sel]))),
                        repr(float(np.mean(objs))) if objs else "",
                        repr(len(objs) / len(sel))])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BENCH_HEADER)
    w.writerows(out)
    return buf.getvalue(), rows


def mean_by(rows, method, value, field_name="objective_w"):
    vals = [getattr(r, field_name) for r in rows if r.method == method and r.value == value and r.feasible]
    return float(np.mean(vals)) if vals else math.nan
