"""End-to-end acceptance checks, one test per criterion.

Each test emits a single PASS/FAIL line on the real stdout so the verdicts
survive pytest's capture in plain runs.
"""

import sys
import time

import numpy as np
import pytest

from lobexec import (
    BASELINE_NAMES,
    ParameterSegment,
    RegimeChain,
    TradeList,
    baseline_trades,
    beta_from_Y,
    build_schedule,
    classify_effects,
    closed_form_Y,
    closure_identity_residual,
    cost_of_trades,
    expected_cost,
    exponential_Q,
    make_grid,
    optimal_strategy_path,
    perturbation_test,
    sample_gamma,
    sample_regime_path,
    solve_regime_Y,
    solve_Y_backward,
)
from lobexec.scenarios import scenario


def _verdict(num: int, label: str, ok: bool) -> None:
    print(f"[criterion {num:02d}] {label}: {'PASS' if ok else 'FAIL'}", file=sys.__stdout__)
    sys.__stdout__.flush()


def solved_beta(sched, n):
    return beta_from_Y(sched, solve_Y_backward(sched, n))


def test_criterion_01_closed_form_matches_backward_solver():
    ok = True
    detail = []
    for name in ("S1", "S2", "S3"):
        s = scenario(name)
        t0 = time.perf_counter()
        Y = solve_Y_backward(s.schedule, 4000)
        exact = np.array([closed_form_Y(s.schedule, t) for t in Y.grid])
        elapsed = time.perf_counter() - t0
        err = float(np.max(np.abs(Y.values - exact)))
        detail.append((name, err, elapsed))
        ok = ok and err <= 1e-8 and elapsed < 1.0
    _verdict(1, "closed form vs backward solver (1e-8, <1s per scenario)", ok)
    assert ok, detail


def test_criterion_02_value_bounds_on_all_scenarios():
    ok = True
    for name in ("S1", "S2", "S3", "S4", "S5", "S6", "S7"):
        s = scenario(name)
        Y = solve_Y_backward(s.schedule, 2000)
        ok = ok and Y.values[-1] == 0.5
        ok = ok and np.all(Y.values >= 0.0) and np.all(Y.values <= 0.5 + 1e-10)
    for chain in (
        RegimeChain(states=((0.1, 0.5, 0.0),), generator=np.array([[0.0]])),
        RegimeChain(
            states=((0.2, 1.0, 0.0), (-0.2, 1.0, 0.3)),
            generator=np.array([[-2.0, 2.0], [2.0, -2.0]]),
        ),
    ):
        surface = solve_regime_Y(chain, 2000, horizon=1.0)
        ok = ok and np.all(surface.values[-1] == 0.5)
        ok = ok and np.all(surface.values >= 0.0)
        ok = ok and np.all(surface.values <= 0.5 + 1e-10)
    _verdict(2, "value process in [0, 1/2], terminal 1/2 (incl. regime chains)", ok)
    assert ok


def test_criterion_03_effect_flags_and_overjump_window():
    expected = {
        "S1": (False, False),
        "S2": (True, True),
        "S3": (True, False),
        "S4": (False, False),
        "S5": (True, True),
        "S6": (True, False),
    }
    ok = True
    got = {}
    for name, flags in expected.items():
        s = scenario(name)
        beta = solved_beta(s.schedule, 4000)
        report = classify_effects(beta)
        got[name] = (report.overjump, report.premature)
        ok = ok and got[name] == flags
    # on S3 the position is short exactly while t is in [1, 2)
    s3 = scenario("S3")
    beta = solved_beta(s3.schedule, 4000)
    above = beta.values > 1.0
    window = (beta.grid >= 1.0) & (beta.grid < 2.0)
    ok = ok and np.array_equal(above, window)
    _verdict(3, "effect flags per scenario; short window of S3 is [1, 2)", ok)
    assert ok, got


def _random_positive_schedule(rng):
    n_seg = int(rng.integers(1, 5))
    T = float(rng.uniform(0.5, 3.0))
    cuts = np.sort(rng.uniform(0.05, 0.95, n_seg - 1)) * T
    bounds = np.concatenate([[0.0], cuts, [T]])
    segs = []
    for a, b in zip(bounds[:-1], bounds[1:]):
        rho = float(rng.uniform(0.02, 1.5))
        mu = float(rng.uniform(0.1, 1.5))
        sigma = float(np.sqrt(rng.uniform(0.0, 0.9) * (2.0 * rho + mu)))
        segs.append(ParameterSegment(float(a), float(b), rho, mu, sigma))
    return build_schedule(segs, T)


def test_criterion_04_positive_resilience_guarantee_randomized():
    rng = np.random.default_rng(2024)
    ok = True
    for _ in range(100):
        sched = _random_positive_schedule(rng)
        delta = min(s.rho for s in sched.segments)
        beta = solved_beta(sched, 400)
        bound = max(1.0 - delta / (3.0 * sched.c_bar), 0.0) + 1e-10
        report = classify_effects(beta)
        ok = ok and float(np.max(beta.values)) <= bound
        ok = ok and not report.overjump and not report.premature
    _verdict(4, "100 random schedules with rho >= delta > 0: bound and no effects", ok)
    assert ok


def _random_negative_final_schedule(rng):
    n_seg = int(rng.integers(1, 4))
    T = float(rng.uniform(0.5, 3.0))
    cuts = np.sort(rng.uniform(0.05, 0.95, n_seg - 1)) * T
    bounds = np.concatenate([[0.0], cuts, [T]])
    segs = []
    for k, (a, b) in enumerate(zip(bounds[:-1], bounds[1:])):
        sigma = float(rng.uniform(0.0, 0.8))
        if k == len(bounds) - 2:
            rho = float(rng.uniform(-0.4, -0.02))
        else:
            rho = float(rng.uniform(-0.3, 1.0))
        mu = sigma**2 + 2.0 * abs(rho) + float(rng.uniform(0.05, 1.5))
        segs.append(ParameterSegment(float(a), float(b), rho, mu, sigma))
    return build_schedule(segs, T)


def test_criterion_05_negative_resilience_near_horizon_forces_effect():
    rng = np.random.default_rng(77)
    ok = True
    for _ in range(100):
        sched = _random_negative_final_schedule(rng)
        report = classify_effects(solved_beta(sched, 400))
        ok = ok and (report.overjump or report.premature)
    _verdict(5, "100 random schedules with final rho < 0: some effect occurs", ok)
    assert ok


def test_criterion_06_deterministic_structure_of_optimal_paths():
    ok = True
    detail = []
    for name in ("S1", "S2", "S3"):
        s = scenario(name)
        beta = solved_beta(s.schedule, 4000)
        bundle = exponential_Q(
            beta, s.schedule, sample_gamma(s.schedule, beta.grid, seed=0)
        )
        X, D = optimal_strategy_path(s.ic, beta, bundle)
        ok = ok and np.all(D.values < 0.0)
        for seg in s.schedule.segments:
            inside = (X.grid >= seg.start) & (X.grid < seg.end)
            dvals = D.values[inside]
            relvar = float((dvals.max() - dvals.min()) / abs(dvals.mean()))
            detail.append((name, seg.start, relvar))
            ok = ok and relvar <= 1e-5
            steps = np.diff(X.values[inside])
            # trading direction is opposite to the sign of the resilience
            ok = ok and np.all(np.sign(steps) == -np.sign(seg.rho))
    _verdict(6, "deviation constant per segment, negative; position strictly monotone", ok)
    assert ok, detail


def test_criterion_07_engineered_closure_scenario():
    s = scenario("S7")
    ok = abs(s.kappa - 2.416) <= 5e-3
    beta = solved_beta(s.schedule, 4000)
    inside = (beta.grid >= 1.01) & (beta.grid <= 1.99)
    ok = ok and float(np.max(np.abs(beta.values[inside] - 1.0))) <= 1e-6
    bundle = exponential_Q(beta, s.schedule, sample_gamma(s.schedule, beta.grid, seed=0))
    X, _ = optimal_strategy_path(s.ic, beta, bundle)
    ok = ok and float(np.max(np.abs(X.values[inside]))) <= 1e-8 * abs(s.ic.prefactor)
    ok = ok and closure_identity_residual(s.kappa, 3.0, np.linspace(1.0, 2.0, 4001)) <= 1e-12
    _verdict(7, "closure construction: kappa, flat beta=1, closed position, identity", ok)
    assert ok


def test_criterion_08_deterministic_optimality_and_stationarity():
    ok = True
    rng = np.random.default_rng(5)
    for name in ("S1", "S2", "S3"):
        s = scenario(name)
        opt = expected_cost("optimal", s.schedule, s.ic, steps_per_unit=4000)
        grid = make_grid(s.schedule, 4000)
        for bname in BASELINE_NAMES:
            trades = baseline_trades(bname, s.schedule, s.ic, grid)
            rep = expected_cost(trades, s.schedule, s.ic, steps_per_unit=4000)
            ok = ok and opt.mean_cost < rep.mean_cost
        # five independent round-trip perturbations on a fine grid
        candidates = np.arange(1, 12) * 0.25
        directions = []
        for _ in range(5):
            t1, t2 = np.sort(rng.choice(candidates, size=2, replace=False))
            directions.append(TradeList(np.array([t1, t2]), np.array([0.01, -0.01])))
        results = perturbation_test(
            s.ic, s.schedule, directions, [1e-3], steps_per_unit=256_000
        )
        for r in results:
            ok = ok and abs(r.first_derivative) <= 1e-6 * r.base_cost
            ok = ok and r.second_difference >= -1e-10
    _verdict(8, "optimal beats baselines; cost stationary under round-trip nudges", ok)
    assert ok


def test_criterion_09_stochastic_optimality_within_budget():
    s = scenario("S4")
    t0 = time.perf_counter()
    opt = expected_cost("optimal", s.schedule, s.ic, steps_per_unit=250, n_paths=10_000)
    grid = make_grid(s.schedule, 250)
    ok = True
    for bname in BASELINE_NAMES:
        trades = baseline_trades(bname, s.schedule, s.ic, grid)
        rep = expected_cost(trades, s.schedule, s.ic, steps_per_unit=250, n_paths=10_000)
        ok = ok and opt.mean_cost <= rep.mean_cost - 3.0 * rep.stderr
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 60.0
    _verdict(9, f"Monte Carlo optimality on S4 ({elapsed:.1f}s < 60s)", ok)
    assert ok


def test_criterion_10_hand_oracle_two_block_cost():
    sched = build_schedule([ParameterSegment(0.0, 1.0, 1.0, 0.0, 0.0)], 1.0)
    from lobexec import InitialCondition

    ic = InitialCondition(x=1.0, d=0.0, gamma0=1.0)
    bundle = sample_gamma(sched, make_grid(sched, 1000), seed=0)
    trades = TradeList(np.array([0.0, 1.0]), np.array([-0.5, -0.5]))
    cost = cost_of_trades(trades, bundle, sched, ic)
    ok = abs(cost - (0.25 + 0.25 * np.exp(-1.0))) <= 1e-10
    _verdict(10, "two-block cost equals 1/4 + e^{-1}/4", ok)
    assert ok, cost


def test_criterion_11_regime_degeneracy_and_jump_statistics():
    chain0 = RegimeChain(states=((0.15, 0.8, 0.3),), generator=np.array([[0.0]]))
    surface = solve_regime_Y(chain0, 2000, horizon=1.0)
    sched = build_schedule([ParameterSegment(0.0, 1.0, 0.15, 0.8, 0.3)], 1.0)
    Y = solve_Y_backward(sched, 2000)
    ok = float(np.max(np.abs(surface.values[:, 0] - Y.values))) <= 1e-8

    chain = RegimeChain(
        states=((0.2, 1.0, 0.0), (-0.2, 1.0, 0.0)),
        generator=np.array([[-2.0, 2.0], [2.0, -2.0]]),
    )
    counts = np.array(
        [sample_regime_path(chain, 1.0, seed=13, path_index=i).n_jumps for i in range(100_000)]
    )
    stderr = counts.std(ddof=1) / np.sqrt(counts.size)
    ok = ok and abs(counts.mean() - 2.0) <= 3.0 * stderr
    _verdict(11, "zero-generator degeneracy; mean jump count 2 over 1e5 samples", ok)
    assert ok, (counts.mean(), stderr)


def test_criterion_12_grid_convergence_of_discretized_cost():
    s = scenario("S1")
    densities = (125, 250, 500, 1000, 2000, 4000)
    costs = [
        expected_cost("optimal", s.schedule, s.ic, steps_per_unit=n).mean_cost
        for n in densities
    ]
    deltas = np.abs(np.diff(costs))
    ratios = deltas[:-1] / np.maximum(deltas[1:], 1e-300)
    ok = bool(np.all(ratios >= 3.0) and deltas[-1] <= 2.5e-4)
    _verdict(12, "discretized cost converges under grid halving (>= 3x per step)", ok)
    assert ok, (list(deltas), list(ratios))
