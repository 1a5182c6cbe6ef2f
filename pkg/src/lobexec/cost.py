"""Execution-cost evaluation for pure-jump trade lists, baselines, optimality checks.

A strategy discretized to block trades has the exact cost

    sum_k [ D_{t_k-} * dx_k + gamma_{t_k}/2 * dx_k^2 ],

with the deviation D following the decay/jump recursion between trades.
The continuous optimal strategy enters through refinement of its
discretization, never through direct stochastic integration.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import PreconditionViolated
from .model import InitialCondition, ParameterSchedule, make_grid
from .simulate import (
    PathBundle,
    StrategyPath,
    _trade_indices,
    exponential_Q,
    optimal_strategy_path,
    sample_gamma,
)
from .value_ode import BetaPath, beta_from_Y, solve_Y_backward


@dataclass(frozen=True)
class TradeList:
    """Block trades (time, share delta), sorted by time; deltas sum to -x for a full close."""

    times: np.ndarray
    deltas: np.ndarray

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=float)
        d = np.asarray(self.deltas, dtype=float)
        if t.shape != d.shape or t.ndim != 1:
            raise ValueError("times and deltas must be 1-d arrays of equal length")
        if t.size and np.any(np.diff(t) < 0.0):
            raise ValueError("trade times must be nondecreasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "deltas", d)

    @property
    def net(self) -> float:
        return float(np.sum(self.deltas))

    def scaled(self, c: float) -> "TradeList":
        return TradeList(self.times, c * self.deltas)


@dataclass(frozen=True)
class CostReport:
    mean_cost: float
    stderr: float
    n_paths: int
    deviation_term: float
    quadratic_term: float


def discretize_strategy(X: StrategyPath, grid: np.ndarray | None = None) -> TradeList:
    """Trade at t_k equal to X_{t_k} - X_{t_{k-1}} (X before the grid is x); zero trades omitted."""
    if grid is None:
        grid = X.grid
        vals = X.values
    else:
        idx = _trade_indices(np.asarray(grid, dtype=float), X.grid)
        vals = X.values[idx]
    prev = np.concatenate([[X.x_at_0minus], vals[:-1]])
    deltas = vals - prev
    keep = deltas != 0.0
    return TradeList(np.asarray(grid, dtype=float)[keep], deltas[keep])


def trade_costs(
    trades: TradeList,
    bundle: PathBundle,
    schedule: ParameterSchedule,
    ic: InitialCondition,
) -> tuple[float, float]:
    """(deviation term, half-quadratic-variation term) of a trade list on one path."""
    grid = bundle.grid
    idx = _trade_indices(trades.times, grid)
    delta = np.zeros(grid.size)
    np.add.at(delta, idx, trades.deltas)

    p = schedule.arrays_on_grid(grid)
    R = np.concatenate([[0.0], np.cumsum(p.step_integral(p.rho_right, p.rho_left))])
    growth = np.exp(R)
    impact = growth * bundle.gamma * delta
    cum_before = np.cumsum(impact) - impact
    d_pre = (ic.d + cum_before) / growth
    dev_term = float(np.sum(delta * d_pre))
    quad_term = float(np.sum(0.5 * bundle.gamma * delta**2))
    return dev_term, quad_term


def cost_of_trades(
    trades: TradeList,
    bundle: PathBundle,
    schedule: ParameterSchedule,
    ic: InitialCondition,
) -> float:
    """Realized execution cost of a pure-jump trade list on one path."""
    dev, quad = trade_costs(trades, bundle, schedule, ic)
    return dev + quad


def _solve_beta(schedule: ParameterSchedule, steps_per_unit: int) -> BetaPath:
    return beta_from_Y(schedule, solve_Y_backward(schedule, steps_per_unit))


def expected_cost(
    target,
    schedule: ParameterSchedule,
    ic: InitialCondition,
    *,
    steps_per_unit: int = 250,
    n_paths: int = 10_000,
    seed: int = 42,
    beta: BetaPath | None = None,
) -> CostReport:
    """Expected cost of a TradeList or of the optimal strategy ("optimal").

    Deterministic scenarios (sigma = 0) are evaluated exactly on a single
    path with zero standard error; otherwise a Monte Carlo mean over
    per-path substreams is returned.
    """
    grid = make_grid(schedule, steps_per_unit)
    if beta is None and target == "optimal":
        beta = _solve_beta(schedule, steps_per_unit)
    if schedule.sigma_is_zero:
        n_paths = 1
    costs = np.empty(n_paths)
    devs = np.empty(n_paths)
    quads = np.empty(n_paths)
    for i in range(n_paths):
        bundle = sample_gamma(schedule, grid, seed, gamma0=ic.gamma0, path_index=i)
        if target == "optimal":
            bundle = exponential_Q(beta, schedule, bundle)
            X, _ = optimal_strategy_path(ic, beta, bundle)
            trades = discretize_strategy(X)
        else:
            trades = target
        devs[i], quads[i] = trade_costs(trades, bundle, schedule, ic)
        costs[i] = devs[i] + quads[i]
    mean = float(np.mean(costs))
    stderr = 0.0 if n_paths == 1 else float(np.std(costs, ddof=1) / np.sqrt(n_paths))
    return CostReport(
        mean_cost=mean,
        stderr=stderr,
        n_paths=n_paths,
        deviation_term=float(np.mean(devs)),
        quadratic_term=float(np.mean(quads)),
    )


def baseline_trades(
    name: str, schedule: ParameterSchedule, ic: InitialCondition, grid: np.ndarray
) -> TradeList:
    """Reference strategies: block_at_0, block_at_T, twap, two_blocks."""
    x = ic.x
    T = float(grid[-1])
    if name == "block_at_0":
        return TradeList(np.array([0.0]), np.array([-x]))
    if name == "block_at_T":
        return TradeList(np.array([T]), np.array([-x]))
    if name == "twap":
        times = grid[1:]
        return TradeList(np.asarray(times, dtype=float), np.full(times.size, -x / times.size))
    if name == "two_blocks":
        return TradeList(np.array([0.0, T]), np.array([-x / 2.0, -x / 2.0]))
    raise ValueError(f"unknown baseline {name!r}")


BASELINE_NAMES = ("block_at_0", "block_at_T", "twap", "two_blocks")


@dataclass(frozen=True)
class PerturbationResult:
    direction_times: np.ndarray
    direction_deltas: np.ndarray
    base_cost: float
    first_derivative: float
    second_difference: float


def perturbation_test(
    ic: InitialCondition,
    schedule: ParameterSchedule,
    directions,
    eps_grid,
    *,
    steps_per_unit: int = 256_000,
) -> list[PerturbationResult]:
    """Stationarity check of the discretized optimal strategy.

    Each direction must be a round trip (zero net position change).  For
    every direction the cost J(optimal + eps * direction) is evaluated
    exactly on a fine grid; the report carries the central-difference
    first derivative at 0 and the discrete second difference.  Only
    deterministic scenarios (sigma = 0) are supported.
    """
    if not schedule.sigma_is_zero:
        raise PreconditionViolated("perturbation test requires a deterministic scenario")
    eps = sorted({abs(float(e)) for e in eps_grid} - {0.0})
    if not eps:
        raise ValueError("eps_grid needs at least one nonzero value")
    e = eps[0]

    grid = make_grid(schedule, steps_per_unit)
    beta = _solve_beta(schedule, steps_per_unit)
    bundle = exponential_Q(beta, schedule,
                           sample_gamma(schedule, grid, seed=0, gamma0=ic.gamma0))
    X, _ = optimal_strategy_path(ic, beta, bundle)
    base = discretize_strategy(X)

    results = []
    for direction in directions:
        if abs(direction.net) > 1e-12:
            raise PreconditionViolated("perturbation directions must be round trips")

        def j(scale: float) -> float:
            times = np.concatenate([base.times, direction.times])
            deltas = np.concatenate([base.deltas, scale * direction.deltas])
            order = np.argsort(times, kind="stable")
            return cost_of_trades(
                TradeList(times[order], deltas[order]), bundle, schedule, ic
            )

        j0 = j(0.0)
        jp, jm = j(e), j(-e)
        results.append(
            PerturbationResult(
                direction_times=direction.times,
                direction_deltas=direction.deltas,
                base_cost=j0,
                first_derivative=(jp - jm) / (2.0 * e),
                second_difference=(jp - 2.0 * j0 + jm) / e**2,
            )
        )
    return results


def cost_report_csv(path, rows) -> None:
    """Rows of (scenario id, strategy id, CostReport) to CSV."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scenario", "strategy", "mean", "stderr", "n_paths",
                    "deviation_term", "quadratic_term"])
        for scenario, strategy, rep in rows:
            w.writerow([scenario, strategy, repr(rep.mean_cost), repr(rep.stderr),
                        rep.n_paths, repr(rep.deviation_term), repr(rep.quadratic_term)])
