"""Backward value equation for deterministic schedules, and the feedback coefficient.

For a deterministic parameter schedule the value process Y solves the
scalar backward ODE

    dY/dt = (rho + mu)^2 Y^2 / (sigma^2 Y + (2 rho + mu - sigma^2)/2) - mu Y,
    Y(T) = 1/2,

which is integrated here segment by segment with classical fourth-order
Runge-Kutta (boundaries are never stepped across).  When sigma = 0, mu is
constant, and rho is piecewise constant, a closed form is available and
serves as a cross-check.  The feedback coefficient is

    beta = (rho + mu) Y / (sigma^2 Y + (2 rho + mu - sigma^2)/2),

right-continuous with left limits taken with the left segment's parameters.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import PreconditionViolated, StepFailure
from .model import ParameterSchedule, make_grid

#: allowed overshoot of [0, 1/2] before the solver reports failure
_BOUND_TOL = 1e-10


@dataclass(frozen=True)
class ValuePath:
    """Value process on a grid: right-continuous values with left limits at boundaries."""

    grid: np.ndarray
    values: np.ndarray
    left_limits: np.ndarray

    def to_csv(self, path) -> None:
        _write_path_csv(path, self.grid, self.values, self.left_limits)


@dataclass(frozen=True)
class BetaPath:
    """Feedback coefficient on a grid; jumps occur exactly where rho jumps."""

    grid: np.ndarray
    values: np.ndarray
    left_limits: np.ndarray
    beta_at_0minus: float = 0.0

    def to_csv(self, path) -> None:
        _write_path_csv(path, self.grid, self.values, self.left_limits)


def _write_path_csv(path, grid, values, left_limits) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "value", "left_limit"])
        for t, v, l in zip(grid, values, left_limits):
            w.writerow([repr(float(t)), repr(float(v)), repr(float(l))])


def read_path_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    grid = np.array([float(r["time"]) for r in rows])
    values = np.array([float(r["value"]) for r in rows])
    left = np.array([float(r["left_limit"]) for r in rows])
    return grid, values, left


def _denominator(rho, mu, sigma, y):
    return sigma**2 * y + 0.5 * (2.0 * rho + mu - sigma**2)


def driver(rho, mu, sigma, y):
    """Right-hand side of the forward-time ODE dY/dt = driver(Y)."""
    den = _denominator(rho, mu, sigma, y)
    return (rho + mu) ** 2 * y**2 / den - mu * y


def closed_form_Y(schedule: ParameterSchedule, t: float) -> float:
    """Exact Y(t) for sigma = 0, constant mu > 0, piecewise-constant rho > -mu/2."""
    _check_closed_form_domain(schedule)
    mu = schedule.segments[0].mu
    T = schedule.horizon
    if t == T:
        return 0.5
    bounds = [s.start for s in schedule.segments] + [T]
    n = max(i for i in range(len(bounds)) if bounds[i] <= t)
    acc = 0.0
    for i in range(n + 1, len(bounds)):
        rho = schedule.segments[i - 1].rho
        lo = max(t, bounds[i - 1])
        acc += (
            (rho + mu) ** 2
            * np.exp(T * mu)
            / (mu * (rho + 0.5 * mu))
            * (np.exp(-lo * mu) - np.exp(-bounds[i] * mu))
        )
    return float(np.exp((T - t) * mu) / (acc + 2.0))


def _check_closed_form_domain(schedule: ParameterSchedule) -> None:
    if schedule.has_formula:
        raise PreconditionViolated("closed form requires piecewise-constant rho")
    mus = {s.mu for s in schedule.segments}
    if len(mus) != 1:
        raise PreconditionViolated("closed form requires constant mu")
    mu = next(iter(mus))
    if mu <= 0.0:
        raise PreconditionViolated("closed form requires mu > 0")
    if any(s.sigma != 0.0 for s in schedule.segments):
        raise PreconditionViolated("closed form requires sigma = 0")
    # rho + mu/2 appears in a denominator; stay strictly away from it
    if any(s.rho + 0.5 * mu < 1e-9 for s in schedule.segments):
        raise PreconditionViolated("closed form requires rho > -mu/2 (margin 1e-9)")


def solve_Y_backward(schedule: ParameterSchedule, n_steps: int = 4000) -> ValuePath:
    """Backward RK4 integration of the value ODE at n_steps per unit time.

    The grid contains every segment boundary; Y is continuous for
    deterministic schedules, so left limits equal values.  Values are
    checked (not clamped) against [0, 1/2].
    """
    grid = make_grid(schedule, n_steps)
    values = np.empty_like(grid)
    values[-1] = 0.5

    y = 0.5
    pos = grid.size - 1
    for seg in reversed(schedule.segments):
        n = int(round((seg.end - seg.start) * n_steps))
        n = max(1, n)
        h = (seg.end - seg.start) / n

        def f(t: float, yy: float) -> float:
            rho = float(seg.rho_at(t))
            den = _denominator(rho, seg.mu, seg.sigma, yy)
            if den <= 0.0:
                raise StepFailure(
                    f"driver denominator {den:.6g} <= 0 at t={t:.6g} (assumption violated)"
                )
            return (rho + seg.mu) ** 2 * yy**2 / den - seg.mu * yy

        t = seg.end
        for _ in range(n):
            k1 = f(t, y)
            k2 = f(t - 0.5 * h, y - 0.5 * h * k1)
            k3 = f(t - 0.5 * h, y - 0.5 * h * k2)
            k4 = f(t - h, y - h * k3)
            y -= h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t -= h
            pos -= 1
            values[pos] = y
        if y < -_BOUND_TOL or y > 0.5 + _BOUND_TOL:
            raise StepFailure(f"Y={y:.12g} left [0, 1/2] at t={seg.start:.6g}")
    return ValuePath(grid=grid, values=values, left_limits=values.copy())


def beta_from_Y(schedule: ParameterSchedule, Y: ValuePath) -> BetaPath:
    """Feedback coefficient along a solved value path."""
    p = schedule.arrays_on_grid(Y.grid)
    vals = (p.rho_right + p.mu_right) * Y.values / _denominator(
        p.rho_right, p.mu_right, p.sigma_right, Y.values
    )
    lefts = (p.rho_left + p.mu_left) * Y.left_limits / _denominator(
        p.rho_left, p.mu_left, p.sigma_left, Y.left_limits
    )
    return BetaPath(grid=Y.grid, values=vals, left_limits=lefts)


def bsde_residual(schedule: ParameterSchedule, Y: ValuePath) -> float:
    """Max |central-difference dY/dt - driver| at interior points of each segment."""
    worst = 0.0
    grid, vals = Y.grid, Y.values
    for seg in schedule.segments:
        inside = (grid >= seg.start - 1e-12) & (grid <= seg.end + 1e-12)
        idx = np.nonzero(inside)[0]
        if idx.size < 3:
            continue
        g = grid[idx]
        v = vals[idx]
        h = g[1] - g[0]
        dydt = (v[2:] - v[:-2]) / (2.0 * h)
        rho = seg.rho_at(g[1:-1])
        resid = np.abs(dydt - driver(rho, seg.mu, seg.sigma, v[1:-1]))
        worst = max(worst, float(np.max(resid)))
    return worst
