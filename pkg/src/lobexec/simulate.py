"""Monte Carlo realizations: depth process, stochastic exponential, optimal strategy.

One realization is a PathBundle: the Brownian increments of a path, the
depth coefficient gamma built from them by exact lognormal stepping, and
the stochastic exponential of the drift-corrected feedback integral.  Both
gamma and the exponential consume the same increment stream; this is part
of the model, not an optimization.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import TradeOutsideHorizon
from .model import InitialCondition, ParameterSchedule
from .rng import substream
from .value_ode import BetaPath


@dataclass(frozen=True)
class PathBundle:
    """One simulated path: increments, depth coefficient, stochastic exponential."""

    grid: np.ndarray
    dW: np.ndarray
    gamma: np.ndarray
    expQ: np.ndarray | None
    seed: int
    path_index: int = 0


@dataclass(frozen=True)
class StrategyPath:
    """Cadlag position path from x at 0- to 0 at T; jumps listed as (time, left, right)."""

    x_at_0minus: float
    grid: np.ndarray
    values: np.ndarray
    left_limits: np.ndarray
    jumps: tuple[tuple[float, float, float], ...]


@dataclass(frozen=True)
class DeviationPath:
    """Cadlag price-deviation path with initial value d at 0-."""

    d_at_0minus: float
    grid: np.ndarray
    values: np.ndarray
    left_limits: np.ndarray


def sample_gamma(
    schedule: ParameterSchedule,
    grid: np.ndarray,
    seed: int,
    gamma0: float = 1.0,
    path_index: int = 0,
) -> PathBundle:
    """Depth path by exact lognormal increments; deterministic when sigma = 0.

    gamma_{t+h} = gamma_t * exp((mu - sigma^2/2) h + sigma dW), stepped on
    a grid that contains all segment boundaries, so mu and sigma are
    constant within each step.
    """
    gen = substream(seed, path_index)
    dt = np.diff(grid)
    dW = gen.standard_normal(dt.size) * np.sqrt(dt)
    p = schedule.arrays_on_grid(grid)
    drift = p.step_integral(p.mu_right - 0.5 * p.sigma_right**2,
                            p.mu_left - 0.5 * p.sigma_left**2)
    # sigma is constant within a step; the right value at the left endpoint is that constant
    log_incr = drift + p.sigma_right[:-1] * dW
    gamma = gamma0 * np.exp(np.concatenate([[0.0], np.cumsum(log_incr)]))
    return PathBundle(grid=grid, dW=dW, gamma=gamma, expQ=None, seed=seed, path_index=path_index)


def exponential_Q(beta: BetaPath, schedule: ParameterSchedule, bundle: PathBundle) -> PathBundle:
    """Complete a bundle with the stochastic exponential

    exp{ -int beta (mu + rho - sigma^2) + beta^2 sigma^2 / 2 ds - int beta sigma dW },

    using per-step trapezoidal time integrals (left/right limits at
    boundaries) and the bundle's own increment stream.
    """
    if not np.array_equal(beta.grid, bundle.grid):
        raise ValueError("beta and bundle grids differ")
    p = schedule.arrays_on_grid(bundle.grid)
    f_right = beta.values * (p.mu_right + p.rho_right - p.sigma_right**2) \
        + 0.5 * beta.values**2 * p.sigma_right**2
    f_left = beta.left_limits * (p.mu_left + p.rho_left - p.sigma_left**2) \
        + 0.5 * beta.left_limits**2 * p.sigma_left**2
    time_part = p.step_integral(f_right, f_left)
    stoch_part = beta.values[:-1] * p.sigma_right[:-1] * bundle.dW
    log_eq = -np.concatenate([[0.0], np.cumsum(time_part + stoch_part)])
    return replace(bundle, expQ=np.exp(log_eq))


def optimal_strategy_path(
    ic: InitialCondition, beta: BetaPath, bundle: PathBundle
) -> tuple[StrategyPath, DeviationPath]:
    """Optimal position and deviation along one completed bundle.

    X*_t = (x - d/gamma0) (1 - beta_t) E(Q)_t on [0, T), with X*_{0-} = x
    and the block to X*_T = 0; D*_t = (x - d/gamma0)(-gamma_t beta_t) E(Q)_t
    with the terminal value (x - d/gamma0)(-gamma_T) E(Q)_T.
    """
    if bundle.expQ is None:
        raise ValueError("bundle lacks expQ; call exponential_Q first")
    pref = ic.prefactor
    x_vals = pref * (1.0 - beta.values) * bundle.expQ
    x_left = pref * (1.0 - beta.left_limits) * bundle.expQ
    x_vals[-1] = 0.0

    d_vals = pref * (-bundle.gamma * beta.values) * bundle.expQ
    d_left = pref * (-bundle.gamma * beta.left_limits) * bundle.expQ
    d_vals[-1] = pref * (-bundle.gamma[-1]) * bundle.expQ[-1]

    jumps: list[tuple[float, float, float]] = []
    if x_vals[0] != ic.x:
        jumps.append((float(bundle.grid[0]), ic.x, float(x_vals[0])))
    interior = np.nonzero(~np.isclose(x_left[1:-1], x_vals[1:-1], rtol=0.0, atol=1e-14))[0] + 1
    for k in interior:
        jumps.append((float(bundle.grid[k]), float(x_left[k]), float(x_vals[k])))
    jumps.append((float(bundle.grid[-1]), float(x_left[-1]), 0.0))

    X = StrategyPath(
        x_at_0minus=ic.x,
        grid=bundle.grid,
        values=x_vals,
        left_limits=x_left,
        jumps=tuple(jumps),
    )
    D = DeviationPath(d_at_0minus=ic.d, grid=bundle.grid, values=d_vals, left_limits=d_left)
    return X, D


def deviation_of_trades(
    ic: InitialCondition,
    trades,
    bundle: PathBundle,
    schedule: ParameterSchedule,
) -> DeviationPath:
    """Deviation of a pure-jump trade list: decay by exp(-int rho) between
    trades, jump by gamma * delta at each trade (time-0 trades included).

    The quadratic-covariation term vanishes for finite-variation jump
    strategies against the continuous depth process.
    """
    grid = bundle.grid
    idx = _trade_indices(trades.times, grid)
    delta_on_grid = np.zeros(grid.size)
    np.add.at(delta_on_grid, idx, trades.deltas)

    p = schedule.arrays_on_grid(grid)
    R = np.concatenate([[0.0], np.cumsum(p.step_integral(p.rho_right, p.rho_left))])
    growth = np.exp(R)
    impact = growth * bundle.gamma * delta_on_grid
    cum_after = np.cumsum(impact)
    cum_before = cum_after - impact
    values = (ic.d + cum_after) / growth
    left_limits = (ic.d + cum_before) / growth
    return DeviationPath(d_at_0minus=ic.d, grid=grid, values=values, left_limits=left_limits)


def _trade_indices(times: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Grid indices of trade times; every trade must land on a grid point."""
    if times.size and (times.min() < grid[0] - 1e-12 or times.max() > grid[-1] + 1e-12):
        raise TradeOutsideHorizon("trade time outside [0, T]")
    idx = np.searchsorted(grid, times)
    idx = np.clip(idx, 0, grid.size - 1)
    # searchsorted may land one slot right of the matching point
    shift = np.abs(grid[np.maximum(idx - 1, 0)] - times) < np.abs(grid[idx] - times)
    idx = np.where(shift, idx - 1, idx)
    if np.any(np.abs(grid[idx] - times) > 1e-9):
        raise TradeOutsideHorizon("trade time not on the simulation grid")
    return idx


def bundle_to_csv(path, bundle: PathBundle, X: StrategyPath | None = None,
                  D: DeviationPath | None = None) -> None:
    """Per-path CSV: time, gamma, expQ, and optionally X and D with left limits."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        header = ["time", "gamma", "expQ"]
        if X is not None:
            header += ["X", "X_left"]
        if D is not None:
            header += ["D", "D_left"]
        w.writerow(header)
        eq = bundle.expQ if bundle.expQ is not None else np.full(bundle.grid.size, np.nan)
        for k, t in enumerate(bundle.grid):
            row = [repr(float(t)), repr(float(bundle.gamma[k])), repr(float(eq[k]))]
            if X is not None:
                row += [repr(float(X.values[k])), repr(float(X.left_limits[k]))]
            if D is not None:
                row += [repr(float(D.values[k])), repr(float(D.left_limits[k]))]
            w.writerow(row)
