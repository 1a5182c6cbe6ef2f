"""Value surface and path sampling for Markov-chain parameter regimes.

When (rho, mu, sigma) follows a finite-state Markov chain independent of
the Brownian noise, the value process is y(t, state), where the
state-indexed functions solve the coupled backward system

    dY^i/dt = driver_i(Y^i) - sum_j q_ij (Y^j - Y^i),  Y^i(T) = 1/2.

The compensated state-jump martingale is never materialized; realized
paths evaluate the surface along sampled regime trajectories and feed the
result to the simulation and cost modules.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import StepFailure
from .model import ParameterSchedule, ParameterSegment, RegimeChain, build_schedule
from .rng import substream
from .value_ode import BetaPath


@dataclass(frozen=True)
class RegimeValueSurface:
    """Y per (grid time, state); terminal row is 1/2."""

    grid: np.ndarray
    values: np.ndarray  # shape (n_times, n_states)

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "state", "value"])
            for k, t in enumerate(self.grid):
                for j in range(self.values.shape[1]):
                    w.writerow([repr(float(t)), j, repr(float(self.values[k, j]))])


@dataclass(frozen=True)
class RegimePath:
    """One sampled regime trajectory: jump times and visited states on [0, T]."""

    jump_times: np.ndarray
    states: np.ndarray  # visited states; states[k] holds on [jump_times[k], jump_times[k+1])
    horizon: float

    @property
    def n_jumps(self) -> int:
        return self.jump_times.size - 1

    def to_schedule(self, chain: RegimeChain) -> ParameterSchedule:
        """Piecewise-constant parameter schedule realized by this trajectory."""
        edges = np.concatenate([self.jump_times, [self.horizon]])
        segs = [
            ParameterSegment(float(edges[k]), float(edges[k + 1]), *chain.states[s])
            for k, s in enumerate(self.states)
        ]
        return build_schedule(segs, self.horizon)


@dataclass(frozen=True)
class BoundsReport:
    ok: bool
    worst_violation: float
    location: tuple[float, int] | None


def solve_regime_Y(chain: RegimeChain, n_steps: int, horizon: float = 1.0) -> RegimeValueSurface:
    """Backward RK4 for the coupled state system at n_steps per unit time."""
    n = max(1, int(round(horizon * n_steps)))
    grid = np.linspace(0.0, horizon, n + 1)
    h = horizon / n
    params = np.array(chain.states)  # columns rho, mu, sigma
    rho, mu, sig = params[:, 0], params[:, 1], params[:, 2]
    q = chain.generator

    def f(y: np.ndarray) -> np.ndarray:
        den = sig**2 * y + 0.5 * (2.0 * rho + mu - sig**2)
        if np.any(den <= 0.0):
            raise StepFailure("driver denominator hit zero in a regime state")
        return (rho + mu) ** 2 * y**2 / den - mu * y - q @ y

    values = np.empty((n + 1, chain.n_states))
    y = np.full(chain.n_states, 0.5)
    values[-1] = y
    for k in range(n - 1, -1, -1):
        k1 = f(y)
        k2 = f(y - 0.5 * h * k1)
        k3 = f(y - 0.5 * h * k2)
        k4 = f(y - h * k3)
        y = y - h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        values[k] = y
    return RegimeValueSurface(grid=grid, values=values)


def sample_regime_path(chain: RegimeChain, T: float, seed: int, path_index: int = 0) -> RegimePath:
    """Exact jump-time sampling: exponential holding times, embedded-chain moves.

    Uses its own substream, independent of the Brownian streams.
    """
    gen = substream(seed, path_index)
    q = chain.generator
    times = [0.0]
    states = [chain.initial_state]
    t = 0.0
    s = chain.initial_state
    while True:
        rate = -q[s, s]
        if rate <= 0.0:
            break
        t += gen.exponential(1.0 / rate)
        if t >= T:
            break
        probs = q[s].copy()
        probs[s] = 0.0
        probs /= rate
        s = int(gen.choice(chain.n_states, p=probs))
        times.append(t)
        states.append(s)
    return RegimePath(np.array(times), np.array(states), float(T))


def check_regime_bounds(surface: RegimeValueSurface, tol: float = 1e-10) -> BoundsReport:
    """Confirm every entry lies in [0, 1/2] and the terminal row is exactly 1/2."""
    v = surface.values
    below = np.maximum(0.0 - v, 0.0)
    above = np.maximum(v - 0.5, 0.0)
    violation = np.maximum(below, above)
    terminal_off = np.abs(v[-1] - 0.5)
    worst = float(max(violation.max(), terminal_off.max()))
    if worst <= tol and np.all(v[-1] == 0.5):
        return BoundsReport(ok=True, worst_violation=worst, location=None)
    if terminal_off.max() > 0.0:
        j = int(np.argmax(terminal_off))
        return BoundsReport(False, worst, (float(surface.grid[-1]), j))
    k, j = np.unravel_index(int(np.argmax(violation)), violation.shape)
    return BoundsReport(False, worst, (float(surface.grid[k]), int(j)))


def beta_along_path(
    surface: RegimeValueSurface, chain: RegimeChain, path: RegimePath, grid: np.ndarray
) -> BetaPath:
    """Feedback coefficient along a realized regime trajectory.

    Y is interpolated linearly in time within the realized state; jumps of
    beta occur at regime switches (and nowhere else), with left limits
    taken in the pre-switch state.
    """
    state_right = _state_at(path, grid, right=True)
    state_left = _state_at(path, grid, right=False)
    vals = np.empty(grid.size)
    lefts = np.empty(grid.size)
    for j in range(chain.n_states):
        col = np.interp(grid, surface.grid, surface.values[:, j])
        vals = np.where(state_right == j, _beta_scalar(chain.states[j], col), vals)
        lefts = np.where(state_left == j, _beta_scalar(chain.states[j], col), lefts)
    return BetaPath(grid=grid, values=vals, left_limits=lefts)


def _beta_scalar(state: tuple[float, float, float], y: np.ndarray) -> np.ndarray:
    rho, mu, sig = state
    return (rho + mu) * y / (sig**2 * y + 0.5 * (2.0 * rho + mu - sig**2))


def _state_at(path: RegimePath, grid: np.ndarray, right: bool) -> np.ndarray:
    side = "right" if right else "left"
    idx = np.searchsorted(path.jump_times, grid, side=side) - 1
    idx = np.clip(idx, 0, path.states.size - 1)
    return path.states[idx]
