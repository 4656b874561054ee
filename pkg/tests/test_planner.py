import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from uavgp.channel import (Deployment, OutsideMainLobeError, SystemConfig, UavPlacement,
                           avg_gains, get_environment)
from uavgp.feasibility import InfeasibleTargetError, complexity_counts
from uavgp.gp import evaluate, solve_gp
from uavgp.planner import (PlannerOptions, build_p11, build_p12, build_p13, centroid_init,
                           default_tan_fit, fit_tan_power, omega_p11, origin_shift,
                           run_algorithm1, solve_p13)
from uavgp.scenarios import make_scenario

CFG = SystemConfig()
DU = get_environment("dense_urban")


def test_centroid_examples():
    assert centroid_init(Deployment([[0, 0], [10, 0]], [0.2, 0.2])) == pytest.approx((5.0, 0.0))
    assert centroid_init(Deployment([[0, 0], [10, 0]], [0.1, 0.3])) == pytest.approx((7.5, 0.0))
    assert centroid_init(Deployment([[3.5, -2.0]], [0.4])) == (3.5, -2.0)


# ---------------------------------------------------------------- tan fit ----

def test_two_sample_fit_interpolates():
    lo, hi = 0.3, 1.4
    fit = fit_tan_power(lo, hi, samples=2)
    assert fit(lo) == pytest.approx(math.tan(lo / 2), rel=1e-12)
    assert fit(hi) == pytest.approx(math.tan(hi / 2), rel=1e-12)


def test_fit_accuracy_on_narrow_range():
    fit = fit_tan_power(math.pi / 18, 0.9)
    assert fit.max_rel_err <= 0.05
    th = np.linspace(math.pi / 18, 0.9, 5001)
    assert np.max(np.abs(fit(th) / np.tan(th / 2) - 1)) <= 0.05


@settings(max_examples=100, deadline=None)
@given(lo=st.floats(0.05, 2.5), width=st.floats(0.01, 3.0))
def test_fit_coefficients_positive(lo, width):
    hi = min(lo + width, math.pi - 1e-3)
    if hi <= lo:
        return
    fit = fit_tan_power(lo, hi)
    assert fit.q1 > 0 and fit.q2 > 0


def test_fit_rejects_degenerate_range():
    for lo, hi in ((0.5, 0.5), (0.8, 0.3), (0.0, 1.0), (0.5, math.pi)):
        with pytest.raises(ValueError):
            fit_tan_power(lo, hi)


def test_default_fit_range():
    sc = make_scenario(10, seed=1)
    x, y = centroid_init(sc.deployment)
    fit = default_tan_fit(sc.deployment, sc.cfg, x, y)
    rmax = float(np.max(np.hypot(sc.deployment.x - x, sc.deployment.y - y)))
    assert fit.lo == sc.cfg.theta0
    assert fit.hi == pytest.approx(2 * math.atan(rmax / sc.cfg.h_min))


# ---------------------------------------------------------------- P1-1 ----

def _tan():
    return fit_tan_power(CFG.theta0, 0.9)


def test_p11_k2_size():
    dep = Deployment([[1, 2], [-3, 0.5]], [0.2, 0.4])
    gp = build_p11(dep, DU, CFG, 0.0, 0.0, _tan())
    assert (gp.n_variables, gp.n_constraints) == (7, 13)


@pytest.mark.parametrize("K", [1, 2, 3, 7, 20])
def test_p11_counts_match_complexity(K):
    sc = make_scenario(K, seed=K)
    gp = build_p11(sc.deployment, sc.env, sc.cfg, 0.0, 0.0, _tan())
    cc = complexity_counts(K, "P1-1")
    assert (gp.n_variables, gp.n_constraints, gp.n_terms) == (cc.s, cc.m, cc.n)


def test_p11_coefficients_positive():
    sc = make_scenario(6, seed=3)
    gp = build_p11(sc.deployment, sc.env, sc.cfg, 1.0, -1.0, _tan())
    for fun in [gp.objective] + gp.constraints:
        assert all(t.coefficient > 0 for t in fun.terms)


def test_p11_sinr_row_equals_independent_omega():
    sc = make_scenario(5, seed=9)
    dep, env, cfg = sc.deployment, sc.env, sc.cfg
    x, y = 0.7, -1.3
    gp = build_p11(dep, env, cfg, x, y, _tan())
    rng = np.random.default_rng(0)
    for _ in range(20):
        vals = {"h": rng.uniform(40, 900), "theta_b": rng.uniform(0.2, 3.0), "t": 0.1}
        for k in range(dep.K):
            vals[f"p{k}"] = rng.uniform(1e-3, 0.5)
            vals[f"u{k}"] = rng.uniform(1e6, 1e9)
        for i in range(dep.K):
            row = gp.constraints[gp.constraint_names.index(f"sinr[{i}]")]
            assert evaluate(row, vals) == pytest.approx(omega_p11(vals, dep, env, cfg, x, y, i), rel=1e-12)


def test_p11_gain_rows_make_sinr_surrogate_conservative():
    # with u_i at its lower bound the surrogate row implies the exact SINR
    # target at any covering beam
    sc = make_scenario(4, seed=2)
    dep, env, cfg = sc.deployment, sc.env, sc.cfg
    x, y = centroid_init(dep)
    gp = build_p11(dep, env, cfg, x, y, _tan())
    res = solve_gp(gp)
    assert res.ok
    v = res.values
    rmax = float(np.max(np.hypot(dep.x - x, dep.y - y)))
    th = max(2 * math.atan(rmax / v["h"]), cfg.theta0)
    assert th <= v["theta_b"] * (1 + 1e-6)
    p = np.array([v[f"p{k}"] for k in range(dep.K)])
    from uavgp.channel import sinr
    gam = sinr(UavPlacement(x, y, v["h"], v["theta_b"]), dep, env, cfg, p)
    assert np.all(gam >= cfg.gamma0 * (1 - 1e-6))


# ---------------------------------------------------------------- P1-2 ----

def test_p12_k2_size():
    dep = Deployment([[1, 2], [-3, 0.5]], [0.2, 0.4])
    gp = build_p12(dep, DU, CFG, 200.0, 0.5, 0.0, 1.0)
    # x_uav, y_uav, t plus (xt, yt, p, u) per device
    assert gp.n_variables == 4 * 2 + 3
    assert gp.n_constraints == 20


@pytest.mark.parametrize("K", [1, 2, 5, 13])
def test_p12_counts(K):
    sc = make_scenario(K, seed=K)
    gp = build_p12(sc.deployment, sc.env, sc.cfg, 250.0, 0.6, 0.0, 0.0)
    assert gp.n_constraints == complexity_counts(K, "P1-2").m
    assert gp.n_variables == 4 * K + 3
    assert gp.n_terms == K * K + 10 * K


def test_origin_shift_makes_coordinates_positive():
    sc = make_scenario(30, seed=8)
    sx, sy = origin_shift(sc.deployment, sc.cfg)
    assert (sc.deployment.x + sx).min() == pytest.approx(sc.cfg.R / 100)
    assert (sc.deployment.y + sy).min() == pytest.approx(sc.cfg.R / 100)


@pytest.mark.parametrize("amgm", ["adaptive", "paper"])
def test_abs_surrogates_at_exact_offsets(amgm):
    rng = np.random.default_rng(4)
    for seed in range(5):
        sc = make_scenario(6, seed=seed)
        dep = sc.deployment
        X, Y = rng.uniform(-5, 5, 2)
        gp = build_p12(dep, DU, sc.cfg, 300.0, 0.6, X, Y, amgm=amgm)
        sx, sy = gp.shift
        vals = gp.initial_assignment()
        vals["x_uav"], vals["y_uav"] = X + sx, Y + sy
        for k in range(dep.K):
            vals[f"xt{k}"] = abs(dep.x[k] - X)
            vals[f"yt{k}"] = abs(dep.y[k] - Y)
        worst = max(evaluate(gp.constraints[i], vals) for i, name in enumerate(gp.constraint_names)
                    if name.startswith("abs_"))
        if amgm == "adaptive":
            # weights are fitted at this very point: every row is tight or slack
            assert worst <= 1 + 1e-12
        else:
            # the fixed half weights generally cut the point off
            assert worst > 1


def test_amgm_bound_direction():
    rng = np.random.default_rng(5)
    a = rng.uniform(1e-3, 100, 10_000)
    b = rng.uniform(1e-3, 100, 10_000)
    for alpha in (2.0, 2.7, 3.5):
        assert np.all((a * a + b * b) ** (-alpha / 4) <= (2 * a * b) ** (-alpha / 4) * (1 + 1e-14))


def test_p12_rejects_unknown_mode():
    with pytest.raises(ValueError):
        build_p12(Deployment([[0, 0]], [0.3]), DU, CFG, 100.0, 0.5, 0.0, 0.0, amgm="median")


# ---------------------------------------------------------------- P1-3 ----

def test_p13_single_device_closed_form():
    cfg = CFG.with_overrides(p_min=1e-15)
    dep = Deployment([[2.0, 1.0]], [0.35])
    pl = UavPlacement(0.0, 0.0, 80.0, 0.4)
    lp = build_p13(dep, DU, cfg, pl)
    assert (lp.n_variables, lp.n_constraints) == (2, 4)
    res = solve_p13(lp)
    g = avg_gains(pl, dep, DU, cfg)[0]
    p_star = cfg.gamma0 * cfg.sigma2 / (8.83 / 0.4 ** 2 * g)
    assert res.values["p0"] == pytest.approx(p_star, rel=1e-6)
    assert res.objective == pytest.approx(0.35 * p_star, rel=1e-6)


def test_p13_symmetric_pair_equal_powers():
    cfg = CFG.with_overrides(p_min=1e-15)
    dep = Deployment([[4.0, 0.0], [-4.0, 0.0]], [0.3, 0.3])
    res = solve_p13(build_p13(dep, DU, cfg, UavPlacement(0.0, 0.0, 60.0, 0.5)))
    assert res.ok
    assert res.values["p0"] == pytest.approx(res.values["p1"], rel=1e-7)


def test_p13_asymmetric_pair_against_grid():
    cfg = CFG.with_overrides(p_min=1e-12, sigma2=1e-9, gamma0_db=-3.0)
    dep = Deployment([[6.0, 1.0], [-2.0, -3.0]], [0.2, 0.45])
    pl = UavPlacement(1.0, 0.0, 50.0, 0.6)
    lp = build_p13(dep, DU, cfg, pl)
    res = solve_p13(lp)
    K = 2
    A, b = lp.A_ub[K:, :K], lp.b_ub[K:]
    ref, _ = oracles.lp_grid_k2(A, b, dep.activation, (0.0, 1.0))
    assert res.objective == pytest.approx(ref * cfg.p_max, rel=1e-3)
    # and against the minimal fixed point of the power-control map
    g = avg_gains(pl, dep, DU, cfg)
    p = oracles.minimal_powers(g, dep.activation, 8.83 / 0.36, cfg.gamma0, cfg.sigma2, cfg.p_min, cfg.p_max)
    assert res.objective == pytest.approx(float(np.max(dep.activation * p)), rel=1e-7)


def test_p13_rejects_uncovered_device():
    dep = Deployment([[0.0, 0.0], [50.0, 0.0]], [0.3, 0.3])
    with pytest.raises(OutsideMainLobeError):
        build_p13(dep, DU, CFG, UavPlacement(0.0, 0.0, 40.0, CFG.theta0))


# ---------------------------------------------------------------- alternating planner ----

def test_symmetric_pair_centres_the_uav():
    cfg = CFG.with_overrides(p_min=1e-15)
    dep = Deployment([[-6.0, 2.0], [6.0, 2.0]], [0.3, 0.3])
    sol = run_algorithm1(dep, DU, cfg)
    assert sol.feasible
    assert sol.placement.x == pytest.approx(0.0, abs=1e-3 * cfg.R)
    assert sol.powers[0] == pytest.approx(sol.powers[1], rel=1e-6)


@pytest.mark.parametrize("K,seed", [(5, 0), (10, 1), (20, 2), (8, 3)])
def test_algorithm1_contract(K, seed):
    sc = make_scenario(K, seed=seed)
    dep, env, cfg = sc.deployment, sc.env, sc.cfg
    sol = run_algorithm1(dep, env, cfg)
    assert sol.feasible, sol.slacks.worst
    assert sol.objective == float(np.max(dep.activation * sol.powers))
    ts = [tr["t"] for tr in sol.trace]
    assert all(b <= a + 1e-9 for a, b in zip(ts, ts[1:]))
    # the final LP only re-optimizes the powers on a larger feasible set
    assert sol.objective <= ts[-1] * (1 + 1e-9)
    pl = sol.placement
    assert pl.theta_b >= cfg.theta0 and pl.h >= cfg.h_min * (1 - 1e-9)
    last = sol.trace[-1]
    assert pl.theta_b == last["theta_b"]
    json.dumps(sol.to_dict())


def test_projection_is_footprint_edge_or_theta0():
    sc = make_scenario(12, seed=6)
    sol = run_algorithm1(sc.deployment, sc.env, sc.cfg)
    prev_x, prev_y = (sol.trace[-2]["x"], sol.trace[-2]["y"]) if len(sol.trace) > 1 else \
        centroid_init(sc.deployment)
    rmax = float(np.max(np.hypot(sc.deployment.x - prev_x, sc.deployment.y - prev_y)))
    edge = 2 * math.atan(rmax / sol.placement.h)
    assert sol.placement.theta_b == pytest.approx(max(edge, sc.cfg.theta0), rel=1e-12)


def test_noise_limited_instances_never_beat_brute_force():
    for seed in range(3):
        sc = make_scenario(3, R=5.0, seed=seed, p_min=1e-15)
        dep, cfg = sc.deployment, sc.cfg
        sol = run_algorithm1(dep, sc.env, cfg)
        ref, _ = oracles.p1_grid_oracle(dep.positions.tolist(), dep.activation, sc.env.to_dict(),
                                        {k: getattr(cfg, k) for k in ("fc", "alpha", "sigma2", "gamma0",
                                                                      "p_min", "p_max", "h_min", "h_max",
                                                                      "theta0", "R")})
        assert sol.feasible
        assert sol.objective >= ref * (1 - 1e-3)


def test_precheck_aborts_before_solving():
    sc = make_scenario(25, seed=0, gamma0_db=-5.0)
    with pytest.raises(InfeasibleTargetError) as err:
        run_algorithm1(sc.deployment, sc.env, sc.cfg)
    assert not err.value.report.feasible


def test_paper_amgm_mode_reports_stage():
    from uavgp.planner import PlannerError
    sc = make_scenario(6, seed=1)
    try:
        sol = run_algorithm1(sc.deployment, sc.env, sc.cfg, PlannerOptions(amgm="paper"))
    except PlannerError as exc:
        assert exc.stage == "P1-2" and exc.iteration == 1
    else:
        assert sol.feasible


@pytest.mark.parametrize("env", ["suburban", "highrise"])
def test_noise_limited_regime_converges(env):
    # late barrier stages here need the equilibrated Newton system; the raw
    # one stalls with full steps and a flat decrement
    sc = make_scenario(25, seed=0, env=env, p_min=1e-12)
    sol = run_algorithm1(sc.deployment, sc.env, sc.cfg)
    assert sol.feasible
    assert sol.objective > float(np.max(sc.deployment.activation)) * 1e-12 * 10
