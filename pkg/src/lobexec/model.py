"""Model inputs: parameter schedules, regime chains, initial conditions.

The standing assumptions on the inputs (rho, mu, sigma) are a strictly
positive lower bound on 2*rho + mu - sigma^2 and a uniform bound on
|rho| and |mu|.  Construction enforces both; `validate_assumptions`
re-checks them, sampling densely on segments where rho is given by a
formula instead of a constant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AssumptionViolated, GapOrOverlap, OutOfRange

#: grid points used per segment when checking pointwise assumptions on
#: formula-valued rho
ASSUMPTION_SAMPLES = 10_000

_BOUNDARY_ATOL = 1e-12


@dataclass(frozen=True)
class RhoFormula:
    """Named closed-form resilience curve on a segment.

    The only supported family, ``inv_sqrt_exp``, is
    ``rho(t) = (kappa * exp(2(t - horizon)) + 1)^(-1/2) - 1``
    with kappa > 0.  Values lie in (-1, 0).
    """

    family: str
    kappa: float
    horizon: float

    def __post_init__(self) -> None:
        if self.family != "inv_sqrt_exp":
            raise ValueError(f"unknown rho formula family: {self.family!r}")
        if self.kappa <= 0.0:
            raise ValueError("kappa must be positive")

    def __call__(self, t):
        return (self.kappa * np.exp(2.0 * (np.asarray(t, dtype=float) - self.horizon)) + 1.0) ** -0.5 - 1.0


@dataclass(frozen=True)
class ParameterSegment:
    """One piece of the (rho, mu, sigma) schedule on [start, end)."""

    start: float
    end: float
    rho: float
    mu: float
    sigma: float
    rho_formula: RhoFormula | None = None

    def __post_init__(self) -> None:
        if not self.start < self.end:
            raise ValueError(f"segment requires start < end, got [{self.start}, {self.end})")

    def rho_at(self, t):
        if self.rho_formula is not None:
            return self.rho_formula(t)
        return self.rho if np.isscalar(t) else np.full(np.shape(t), self.rho)

    def structural_margin(self, t):
        """2*rho + mu - sigma^2 at time t (the convexity margin)."""
        return 2.0 * self.rho_at(t) + self.mu - self.sigma**2

    def margin_min(self, samples: int = ASSUMPTION_SAMPLES) -> float:
        if self.rho_formula is None:
            return float(self.structural_margin(self.start))
        ts = np.linspace(self.start, self.end, samples)
        return float(np.min(self.structural_margin(ts)))

    def rho_abs_max(self, samples: int = ASSUMPTION_SAMPLES) -> float:
        if self.rho_formula is None:
            return abs(self.rho)
        ts = np.linspace(self.start, self.end, samples)
        return float(np.max(np.abs(self.rho_formula(ts))))


@dataclass(frozen=True)
class ParameterSchedule:
    """Deterministic (rho, mu, sigma) on [0, T] as ordered segments.

    Segments partition [0, T); evaluation is right-continuous, with the
    left limit exposed separately.  `eps_bar` is the schedule-wide lower
    bound of 2*rho + mu - sigma^2 and `c_bar` bounds |rho| and |mu|.
    """

    segments: tuple[ParameterSegment, ...]
    horizon: float
    eps_bar: float
    c_bar: float

    @property
    def boundaries(self) -> np.ndarray:
        """Interior segment boundaries (jump candidates)."""
        return np.array([s.start for s in self.segments[1:]])

    @property
    def sigma_is_zero(self) -> bool:
        return all(s.sigma == 0.0 for s in self.segments)

    @property
    def has_formula(self) -> bool:
        return any(s.rho_formula is not None for s in self.segments)

    def segment_index(self, t: float) -> int:
        """Index of the segment whose half-open interval contains t (t=T maps to the last)."""
        if t < 0.0 or t > self.horizon + _BOUNDARY_ATOL:
            raise OutOfRange(f"t={t} outside [0, {self.horizon}]")
        for i, s in enumerate(self.segments):
            if t < s.end:
                return i
        return len(self.segments) - 1

    def params_right(self, t: float) -> tuple[float, float, float]:
        s = self.segments[self.segment_index(t)]
        return float(s.rho_at(t)), s.mu, s.sigma

    def params_left(self, t: float) -> tuple[float, float, float]:
        """Left-limit parameters at t (equals params_right except at boundaries)."""
        if t <= 0.0:
            return self.params_right(0.0)
        i = self.segment_index(t)
        s = self.segments[i]
        if i > 0 and abs(t - s.start) <= _BOUNDARY_ATOL:
            s = self.segments[i - 1]
        return float(s.rho_at(t)), s.mu, s.sigma

    def arrays_on_grid(self, grid: np.ndarray) -> "GridParams":
        """Right-continuous and left-limit parameter arrays on a grid."""
        starts = np.array([s.start for s in self.segments[1:]])
        idx_r = np.searchsorted(starts, grid, side="right")
        idx_l = np.searchsorted(starts, grid, side="left")
        rho_c = np.array([s.rho for s in self.segments])
        mu_c = np.array([s.mu for s in self.segments])
        sig_c = np.array([s.sigma for s in self.segments])

        def fill(idx: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
            rho = rho_c[idx]
            for i, s in enumerate(self.segments):
                if s.rho_formula is not None:
                    mask = idx == i
                    rho[mask] = s.rho_formula(grid[mask])
            return rho, mu_c[idx], sig_c[idx]

        rho_r, mu_r, sig_r = fill(idx_r)
        rho_l, mu_l, sig_l = fill(idx_l)
        return GridParams(grid, rho_r, rho_l, mu_r, mu_l, sig_r, sig_l)


@dataclass(frozen=True)
class GridParams:
    """Schedule parameters evaluated on a grid, split into right values and left limits."""

    grid: np.ndarray
    rho_right: np.ndarray
    rho_left: np.ndarray
    mu_right: np.ndarray
    mu_left: np.ndarray
    sigma_right: np.ndarray
    sigma_left: np.ndarray

    def step_integral(self, f_right: np.ndarray, f_left: np.ndarray) -> np.ndarray:
        """Per-step trapezoid of a function given by right values / left limits.

        Exact for piecewise-constant integrands because the grid contains
        every segment boundary.
        """
        dt = np.diff(self.grid)
        return 0.5 * (f_right[:-1] + f_left[1:]) * dt


@dataclass(frozen=True)
class InitialCondition:
    """Initial position x, initial deviation d, initial depth coefficient gamma0 > 0."""

    x: float
    d: float
    gamma0: float

    def __post_init__(self) -> None:
        if self.gamma0 <= 0.0:
            raise ValueError("gamma0 must be strictly positive")

    @property
    def prefactor(self) -> float:
        """x - d/gamma0, the scale of the optimal strategy."""
        return self.x - self.d / self.gamma0


@dataclass(frozen=True)
class RegimeChain:
    """Finite-state Markov chain over (rho, mu, sigma) triples, independent of the Brownian noise."""

    states: tuple[tuple[float, float, float], ...]
    generator: np.ndarray
    initial_state: int = 0
    eps_bar: float = field(init=False, default=0.0)
    c_bar: float = field(init=False, default=0.0)

    def __post_init__(self) -> None:
        q = np.asarray(self.generator, dtype=float)
        n = len(self.states)
        if q.shape != (n, n):
            raise ValueError(f"generator must be {n}x{n}, got {q.shape}")
        off_diag = q - np.diag(np.diag(q))
        if np.any(off_diag < 0.0):
            raise ValueError("off-diagonal generator rates must be nonnegative")
        if np.max(np.abs(q.sum(axis=1))) > 1e-12:
            raise ValueError("generator rows must sum to zero (tol 1e-12)")
        if not 0 <= self.initial_state < n:
            raise ValueError("initial_state out of range")
        margins = [2.0 * r + m - s**2 for r, m, s in self.states]
        eps_bar = min(margins)
        if eps_bar <= 0.0:
            raise AssumptionViolated(
                f"state violates 2*rho + mu - sigma^2 > 0 (min margin {eps_bar:.6g})"
            )
        object.__setattr__(self, "generator", q)
        object.__setattr__(self, "eps_bar", float(eps_bar))
        object.__setattr__(
            self, "c_bar", float(max(max(abs(r), abs(m)) for r, m, s in self.states))
        )

    @property
    def n_states(self) -> int:
        return len(self.states)


@dataclass(frozen=True)
class AssumptionReport:
    ok: bool
    eps_bar: float
    c_bar: float
    sampled_margin_min: float
    messages: tuple[str, ...] = ()


def build_schedule(segments, horizon: float) -> ParameterSchedule:
    """Validate segments, normalize them to a partition of [0, T), and compute bounds.

    Raises GapOrOverlap if the segments leave a gap or overlap, and
    AssumptionViolated if the structural margin 2*rho + mu - sigma^2 is
    not strictly positive everywhere.
    """
    segs = tuple(sorted(segments, key=lambda s: s.start))
    if not segs:
        raise GapOrOverlap("empty segment list")
    if abs(segs[0].start) > _BOUNDARY_ATOL:
        raise GapOrOverlap(f"first segment starts at {segs[0].start}, expected 0")
    if abs(segs[-1].end - horizon) > _BOUNDARY_ATOL:
        raise GapOrOverlap(f"last segment ends at {segs[-1].end}, expected T={horizon}")
    for a, b in zip(segs, segs[1:]):
        if abs(a.end - b.start) > _BOUNDARY_ATOL:
            raise GapOrOverlap(f"gap or overlap between t={a.end} and t={b.start}")

    eps_bar = min(s.margin_min() for s in segs)
    if eps_bar <= 0.0:
        raise AssumptionViolated(
            f"2*rho + mu - sigma^2 must stay positive; minimum is {eps_bar:.6g}"
        )
    c_bar = max(max(s.rho_abs_max(), abs(s.mu)) for s in segs)
    return ParameterSchedule(segs, float(horizon), float(eps_bar), float(c_bar))


def eval_params(schedule: ParameterSchedule, t: float) -> tuple[float, float, float]:
    """Right-continuous (rho, mu, sigma) at t; at t=T the last segment's value."""
    return schedule.params_right(t)


def eval_params_left(schedule: ParameterSchedule, t: float) -> tuple[float, float, float]:
    """Left-limit (rho, mu, sigma) at t."""
    return schedule.params_left(t)


def validate_assumptions(schedule: ParameterSchedule) -> AssumptionReport:
    """Re-check the standing assumptions, sampling formula segments densely."""
    messages: list[str] = []
    sampled_min = min(s.margin_min() for s in schedule.segments)
    ok = True
    if sampled_min <= 0.0:
        ok = False
        messages.append(
            f"structural margin 2*rho + mu - sigma^2 reaches {sampled_min:.6g} <= 0"
        )
    return AssumptionReport(
        ok=ok,
        eps_bar=schedule.eps_bar,
        c_bar=schedule.c_bar,
        sampled_margin_min=float(sampled_min),
        messages=tuple(messages),
    )


def make_grid(schedule: ParameterSchedule, steps_per_unit: int = 4000) -> np.ndarray:
    """Time grid containing every segment boundary, uniform within segments."""
    if steps_per_unit < 1:
        raise ValueError("steps_per_unit must be >= 1")
    pieces = []
    for s in schedule.segments:
        n = max(1, int(round((s.end - s.start) * steps_per_unit)))
        seg = np.linspace(s.start, s.end, n + 1)
        pieces.append(seg[:-1])
    pieces.append(np.array([schedule.horizon]))
    return np.concatenate(pieces)
