"""Pre-solve SINR bound, post-solve constraint audit and problem-size bookkeeping."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .channel import G3DB_NUMERATOR, ground_distances, path_loss_from_geometry

REL_TOL = 1e-6
ABS_FLOOR = 1e-9


@dataclass
class FeasibilityReport:
    gamma_max_tight: float
    gamma_max_relaxed: float
    gamma0: float
    feasible: bool
    margin: float

    def to_dict(self):
        d = asdict(self)
        d["gamma_max_tight_db"] = 10 * math.log10(self.gamma_max_tight)
        d["gamma_max_relaxed_db"] = (10 * math.log10(self.gamma_max_relaxed)
                                     if math.isfinite(self.gamma_max_relaxed) else None)
        if not math.isfinite(self.gamma_max_relaxed):
            d["gamma_max_relaxed"] = None
        d["gamma0_db"] = 10 * math.log10(self.gamma0)
        return d


class InfeasibleTargetError(ValueError):
    def __init__(self, report):
        self.report = report
        super().__init__(
            f"target SINR {10 * math.log10(report.gamma0):.3f} dB exceeds the bound "
            f"{10 * math.log10(report.gamma_max_tight):.3f} dB for this deployment"
        )


def max_feasible_sinr(dep, cfg):
    """Largest target SINR any configuration can meet for every device."""
    cmax = float(np.max(dep.activation))
    interference = (dep.K - 1) * cmax
    noise = cfg.sigma2 * cfg.theta0 ** 2 / (G3DB_NUMERATOR * cfg.p_max)
    tight = 1.0 / (interference + noise)
    relaxed = 1.0 / interference if interference > 0 else math.inf
    return FeasibilityReport(tight, relaxed, cfg.gamma0, cfg.gamma0 <= tight, tight - cfg.gamma0)


@dataclass
class ConstraintSlacks:
    sinr: np.ndarray
    power_low: np.ndarray
    power_high: np.ndarray
    height: float
    beamwidth: float
    footprint: float
    ratios: dict
    feasible: bool
    worst: str

    def to_dict(self):
        return {
            "sinr": self.sinr.tolist(), "power_low": self.power_low.tolist(),
            "power_high": self.power_high.tolist(), "height": self.height,
            "beamwidth": self.beamwidth, "footprint": self.footprint,
            "min_relative_slack": float(min(1.0 - max(v) for v in self.ratios.values())),
            "feasible": self.feasible, "worst": self.worst,
        }


def _passes(ratio):
    # g(x) <= 1 form: pass when g <= 1 + tol, with an absolute floor near zero
    return ratio <= 1.0 + max(REL_TOL, ABS_FLOOR)


def verify_solution(solution, dep, env, cfg):
    """Audit a solution (anything with ``placement`` and ``powers``) against
    the original problem using the exact channel; never raises on
    infeasibility, the verdict is in ``feasible``."""
    return verify_point(solution.placement, solution.powers, dep, env, cfg)


def verify_point(placement, powers, dep, env, cfg):
    powers = np.asarray(powers, dtype=float)
    r = ground_distances(placement, dep)
    G = G3DB_NUMERATOR / placement.theta_b ** 2
    g = 1.0 / path_loss_from_geometry(r, placement.h, env, cfg)
    rx = dep.activation * powers * g
    gamma = G * powers * g / (G * (rx.sum() - rx) + cfg.sigma2)
    need = 2.0 * math.atan(float(r.max()) / placement.h)
    ratios = {
        "sinr": cfg.gamma0 / gamma,
        "power_low": cfg.p_min / powers,
        "power_high": powers / cfg.p_max,
        "height": [cfg.h_min / placement.h],
        "beamwidth": [cfg.theta0 / placement.theta_b],
        "footprint": [need / placement.theta_b],
    }
    worst_name, worst_val = max(((k, float(np.max(v))) for k, v in ratios.items()), key=lambda kv: kv[1])
    feasible = all(_passes(float(np.max(v))) for v in ratios.values())
    return ConstraintSlacks(
        sinr=gamma - cfg.gamma0,
        power_low=powers - cfg.p_min,
        power_high=cfg.p_max - powers,
        height=placement.h - cfg.h_min,
        beamwidth=placement.theta_b - cfg.theta0,
        footprint=placement.theta_b - need,
        ratios={k: np.atleast_1d(np.asarray(v, dtype=float)) for k, v in ratios.items()},
        feasible=feasible,
        worst=f"{worst_name} ({worst_val:.6g})",
    )


@dataclass
class ComplexityCounts:
    subproblem: str
    K: int
    m: int
    n: int | None
    s: int
    C1: float | None
    C2: float | None


def complexity_counts(K, subproblem, eps=1e-2, delta=1.0):
    """Constraint, term and variable counts of each sub-problem plus the
    interior-point iteration (C1) and per-iteration operation (C2) orders."""
    if K < 1:
        raise ValueError("K must be >= 1")
    key = str(subproblem).upper().replace("_", "-")
    if key in ("P1-1", "P11"):
        m, n, s = 5 * K + 3, K * K + 4 * K + 3, 2 * K + 3
    elif key in ("P1-2", "P12"):
        m, n, s = 10 * K, K * K + 9 * K, 6 * K + 1
    elif key in ("P1-3", "P13"):
        m, n, s = 4 * K, None, K + 1
        c1 = math.sqrt(m) * math.log(1.0 / eps)
        return ComplexityCounts("P1-3", K, m, None, s, c1, float(s * s * m))
    else:
        raise ValueError(f"unknown sub-problem {subproblem!r}")
    L = math.log((n + m) * delta / eps)
    c1 = math.sqrt(n + m) * L
    c2 = (m + s) * (s + n) * math.sqrt(m + n) * L
    return ComplexityCounts(key, K, m, n, s, c1, c2)
