import math

import numpy as np
import pytest

from uavgp.baselines import BaselineFailure, GaConfig, NlpConfig, solve_ga, solve_nlp_ipm
from uavgp.channel import Deployment, SystemConfig, get_environment, path_loss_from_geometry
from uavgp.feasibility import verify_solution
from uavgp.scenarios import make_scenario

DU = get_environment("dense_urban")


def single_device_optimum(c, cfg, env=DU):
    # hover straight above the device at the lowest altitude with the
    # narrowest beam; power is the larger of p_min and the SINR requirement
    g = 1.0 / float(path_loss_from_geometry(0.0, cfg.h_min, env, cfg))
    need = cfg.gamma0 * cfg.sigma2 * cfg.theta0 ** 2 / (8.83 * g)
    return c * max(cfg.p_min, need)


def test_ga_is_deterministic():
    sc = make_scenario(6, seed=2)
    ga = GaConfig(population=40, generations=40, seed=5)
    a = solve_ga(sc.deployment, sc.env, sc.cfg, ga)
    b = solve_ga(sc.deployment, sc.env, sc.cfg, ga)
    assert a.objective == b.objective
    assert np.array_equal(a.powers, b.powers)
    assert a.placement == b.placement


def test_ga_best_so_far_is_monotone_and_feasible():
    sc = make_scenario(10, seed=3)
    sol = solve_ga(sc.deployment, sc.env, sc.cfg, GaConfig(population=60, generations=80, seed=1))
    best = np.array([tr["best"] for tr in sol.trace])
    fin = best[np.isfinite(best)]
    assert np.all(np.diff(fin) <= 0)
    assert sol.objective == fin[-1]
    assert sol.feasible and verify_solution(sol, sc.deployment, sc.env, sc.cfg).feasible


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_ga_single_device_near_closed_form(seed):
    # a tiny p_min makes the SINR requirement the binding lower bound
    cfg = SystemConfig().with_overrides(p_min=1e-15)
    dep = Deployment([[3.0, -4.0]], [0.3])
    sol = solve_ga(dep, DU, cfg, GaConfig(seed=seed))
    ref = single_device_optimum(0.3, cfg)
    assert sol.feasible
    assert ref * (1 - 1e-9) <= sol.objective <= ref * 1.05


def test_nlp_single_device_near_closed_form():
    cfg = SystemConfig().with_overrides(p_min=1e-15)
    dep = Deployment([[3.0, -4.0]], [0.3])
    sol = solve_nlp_ipm(dep, DU, cfg)
    ref = single_device_optimum(0.3, cfg)
    assert sol.feasible
    assert sol.objective == pytest.approx(ref, rel=1e-2)


def test_nlp_symmetric_pair():
    cfg = SystemConfig().with_overrides(p_min=1e-15)
    dep = Deployment([[-6.0, 0.0], [6.0, 0.0]], [0.3, 0.3])
    sol = solve_nlp_ipm(dep, DU, cfg)
    assert sol.feasible
    assert sol.powers[0] == pytest.approx(sol.powers[1], rel=0.05)
    assert abs(sol.placement.x) <= 0.05 * cfg.R


def test_default_regime_hits_power_floor():
    sc = make_scenario(5, seed=4)
    for sol in (solve_ga(sc.deployment, sc.env, sc.cfg, GaConfig(seed=0)),
                solve_nlp_ipm(sc.deployment, sc.env, sc.cfg)):
        assert sol.feasible
        assert sol.objective >= float(np.max(sc.deployment.activation)) * sc.cfg.p_min * (1 - 1e-9)


@pytest.mark.parametrize("kw", [{"population": 1}, {"generations": 0}, {"crossover_rate": 1.5},
                                {"mutation_rate": -0.1}, {"elitism": 100}])
def test_ga_config_validation(kw):
    with pytest.raises(ValueError):
        GaConfig(**kw)


@pytest.mark.parametrize("kw", [{"starts": 0}, {"stages": 0}, {"grad_tol": 0.0}])
def test_nlp_config_validation(kw):
    with pytest.raises(ValueError):
        NlpConfig(**kw)


def test_ga_reports_failure_when_nothing_is_feasible():
    sc = make_scenario(25, seed=0, gamma0_db=-5.0)
    with pytest.raises(BaselineFailure):
        solve_ga(sc.deployment, sc.env, sc.cfg, GaConfig(population=20, generations=5))
