"""Command-line entry point: ``uavgp {solve,sweep,bench,feascheck}``."""
from __future__ import annotations

import argparse
import json
import sys

from .channel import ENVIRONMENTS
from .feasibility import InfeasibleTargetError, max_feasible_sinr
from .harness import METHODS, SpecError, load_spec, rows_to_csv, run_bench, run_sweep, solve_with
from .baselines import BaselineFailure
from .planner import PlannerError
from .scenarios import ScenarioFormatError, load_scenario

EXIT_OK = 0
EXIT_SOLVER = 1
EXIT_INFEASIBLE = 2
EXIT_USAGE = 64
EXIT_DATAERR = 65
EXIT_NOINPUT = 66
EXIT_IOERR = 74


class UsageError(Exception):
    pass


class OutputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_overrides(p):
    g = p.add_argument_group("model overrides (win over the scenario file)")
    g.add_argument("--gamma0-db", type=float)
    g.add_argument("--p-min", type=float)
    g.add_argument("--p-max", type=float)
    g.add_argument("--h-min", type=float)
    g.add_argument("--h-max", type=float)
    g.add_argument("--theta0", type=float)
    g.add_argument("--sigma2", type=float)
    g.add_argument("--alpha", type=float)
    g.add_argument("--fc", type=float)
    g.add_argument("--R", type=float, dest="R")
    g.add_argument("--env", choices=sorted(ENVIRONMENTS))


def build_parser():
    p = _Parser(prog="uavgp", description="UAV placement, beamwidth and IoT power planning.")
    p.add_argument("--seed", type=int, default=None, help="RNG seed (overrides scenario/spec seeds)")
    p.add_argument("--threads", type=int, default=1, help="worker processes for sweeps")
    p.add_argument("--tol", type=float, default=None, help="GP solver tolerance (default 1e-8)")
    sub = p.add_subparsers(dest="cmd", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("solve", help="solve one scenario file")
    s.add_argument("scenario")
    s.add_argument("--method", choices=METHODS, default="alg1")
    s.add_argument("--out", help="JSON output path (default stdout)")
    s.add_argument("--allow-infeasible-check-skip", action="store_true",
                   help="run the solver even if the SINR target fails the pre-check")
    _add_overrides(s)

    w = sub.add_parser("sweep", help="run a parameter sweep spec")
    w.add_argument("spec")
    w.add_argument("--out", help="CSV output path (default stdout)")
    w.add_argument("--record-time", action="store_true",
                   help="fill walltime_s (makes the CSV machine dependent)")

    b = sub.add_parser("bench", help="time the methods over a K list")
    b.add_argument("--K", type=int, nargs="+", default=[10, 25, 50])
    b.add_argument("--methods", nargs="*", default=["alg1", "ga"])
    b.add_argument("--reps", type=int, default=5)
    b.add_argument("--out", help="CSV output path (default stdout)")

    f = sub.add_parser("feascheck", help="SINR-target pre-check for a scenario")
    f.add_argument("scenario")
    _add_overrides(f)
    return p


def _overrides(args):
    keys = ("gamma0_db", "p_min", "p_max", "h_min", "h_max", "theta0", "sigma2", "alpha", "fc", "R")
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def _load(args):
    scenario = load_scenario(args.scenario, _overrides(args))
    if args.env:
        scenario.env_name = args.env
    if args.seed is not None:
        scenario.seed = args.seed
    return scenario


def _emit(text, path):
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(str(exc)) from exc


def cmd_solve(args):
    scenario = _load(args)
    report = max_feasible_sinr(scenario.deployment, scenario.cfg)
    envelope = {"scenario": scenario.to_dict(), "method": args.method, "feasibility": report.to_dict()}
    if not report.feasible and not args.allow_infeasible_check_skip:
        envelope.update(status="infeasible-target", solution=None)
        _emit(json.dumps(envelope, indent=2) + "\n", args.out)
        return EXIT_INFEASIBLE
    try:
        sol = solve_with(args.method, scenario, scenario.seed, args.tol,
                         check=not args.allow_infeasible_check_skip)
    except (PlannerError, BaselineFailure, ArithmeticError, ValueError) as exc:
        envelope.update(status="solver-failure", message=str(exc), solution=None)
        _emit(json.dumps(envelope, indent=2) + "\n", args.out)
        return EXIT_SOLVER
    envelope.update(status="ok" if sol.feasible else "infeasible-solution", solution=sol.to_dict())
    _emit(json.dumps(envelope, indent=2) + "\n", args.out)
    return EXIT_OK if sol.feasible else EXIT_SOLVER


def cmd_sweep(args):
    spec = load_spec(args.spec, args.seed)
    rows = run_sweep(spec, threads=args.threads, tol=args.tol, record_time=args.record_time)
    _emit(rows_to_csv(rows), args.out)
    return EXIT_OK


def cmd_bench(args):
    if not args.methods:
        raise UsageError("empty method list")
    if args.reps < 1:
        raise UsageError("--reps must be >= 1")
    first = args.seed or 0
    text, _ = run_bench(args.K, args.methods, range(first, first + args.reps), tol=args.tol)
    _emit(text, args.out)
    return EXIT_OK


def cmd_feascheck(args):
    scenario = _load(args)
    report = max_feasible_sinr(scenario.deployment, scenario.cfg)
    sys.stdout.write(json.dumps(report.to_dict(), indent=2) + "\n")
    return EXIT_OK if report.feasible else EXIT_INFEASIBLE


COMMANDS = {"solve": cmd_solve, "sweep": cmd_sweep, "bench": cmd_bench, "feascheck": cmd_feascheck}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.cmd](args)
    except UsageError as exc:
        print(f"uavgp: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OutputError as exc:
        print(f"uavgp: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IOERR
    except (FileNotFoundError, IsADirectoryError) as exc:
        print(f"uavgp: cannot read input: {exc}", file=sys.stderr)
        return EXIT_NOINPUT
    except (ScenarioFormatError, SpecError) as exc:
        print(f"uavgp: malformed input: {exc}", file=sys.stderr)
        return EXIT_DATAERR
    except OSError as exc:
        print(f"uavgp: I/O error: {exc}", file=sys.stderr)
        return EXIT_IOERR
    except InfeasibleTargetError as exc:
        print(f"uavgp: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
