"""Classification of overjumping zero and premature closure, plus static guarantees.

Both effects are read off the feedback coefficient alone: with p_t =
(1 - beta_{t-})(1 - beta_t) on [0, T), a strictly negative p_t marks a
jump of the position across zero, and p_t = 0 (or a continuous crossing
of beta through 1) marks the position touching zero before the horizon.
Positive resilience everywhere rules both out; resilience bounded away
from zero from below near the horizon forces one of them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateY
from .model import ParameterSchedule, ParameterSegment, RhoFormula, build_schedule
from .value_ode import BetaPath, ValuePath, solve_Y_backward

#: tolerance on (1 - beta_{t-})(1 - beta_t) for the equality case
PREMATURE_TOL = 1e-6

GUARANTEE_NO_OVERJUMP = "positive-resilience-no-overjump"
GUARANTEE_NO_EFFECTS = "positive-resilience-no-effects"
GUARANTEE_FORCED_EFFECT = "negative-near-T-forces-effect"


@dataclass(frozen=True)
class EffectReport:
    overjump: bool
    premature: bool
    witnesses: tuple[tuple[float, float, float], ...]
    guarantee: str | None = None

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps({
            "overjump": self.overjump,
            "premature": self.premature,
            "witnesses": [list(w) for w in self.witnesses],
            "guarantee": self.guarantee,
        }, indent=2))


def classify_effects(beta: BetaPath, tol: float = PREMATURE_TOL) -> EffectReport:
    """Flag overjump / premature closure from a solved feedback path.

    Grid points use stored left limits (with beta = 0 at 0-); continuous
    crossings of 1 between adjacent grid points count as premature
    closure.  Only times strictly before the horizon are considered.
    """
    one_minus = 1.0 - beta.values
    one_minus_left = 1.0 - beta.left_limits
    one_minus_left = one_minus_left.copy()
    one_minus_left[0] = 1.0 - beta.beta_at_0minus

    product = one_minus_left * one_minus
    before_T = slice(0, beta.grid.size - 1)

    overjump_hits = np.nonzero(product[before_T] < -tol)[0]
    equal_hits = np.nonzero(np.abs(product[before_T]) <= tol)[0]
    # a sign change between v_k (right value) and l_{k+1} (left limit at the
    # next point) can only come from a continuous crossing inside the step
    crossing = one_minus[:-1] * one_minus_left[1:] < 0.0
    crossing_hits = np.nonzero(crossing)[0]

    witnesses = []
    for k in overjump_hits:
        witnesses.append((float(beta.grid[k]), float(beta.left_limits[k] if k else beta.beta_at_0minus),
                          float(beta.values[k])))
    for k in equal_hits:
        witnesses.append((float(beta.grid[k]), float(beta.left_limits[k] if k else beta.beta_at_0minus),
                          float(beta.values[k])))
    for k in crossing_hits:
        witnesses.append((float(beta.grid[k]), float(beta.values[k]),
                          float(beta.left_limits[k + 1])))

    return EffectReport(
        overjump=overjump_hits.size > 0,
        premature=equal_hits.size > 0 or crossing_hits.size > 0,
        witnesses=tuple(witnesses),
    )


def check_positive_resilience_guarantee(schedule: ParameterSchedule) -> str | None:
    """No-overjump tag for rho >= 0 everywhere; no-effects tag for min rho > 0."""
    rho_min = _rho_min(schedule)
    if rho_min > 0.0:
        return GUARANTEE_NO_EFFECTS
    if rho_min >= 0.0:
        return GUARANTEE_NO_OVERJUMP
    return None


def check_negative_resilience_trigger(schedule: ParameterSchedule) -> str | None:
    """Forced-effect tag when the final segment has strictly negative resilience."""
    last = schedule.segments[-1]
    if last.rho_formula is not None:
        rho_max = float(np.max(last.rho_formula(np.linspace(last.start, last.end, 1001))))
    else:
        rho_max = last.rho
    if rho_max < 0.0:
        return GUARANTEE_FORCED_EFFECT
    return None


def _rho_min(schedule: ParameterSchedule) -> float:
    vals = []
    for s in schedule.segments:
        if s.rho_formula is None:
            vals.append(s.rho)
        else:
            vals.append(float(np.min(s.rho_formula(np.linspace(s.start, s.end, 10_001)))))
    return min(vals)


def build_premature_closure_scenario(
    T1: float,
    T2: float,
    T: float,
    sigma: float,
    rho1: float,
    rho3: float,
    *,
    n_steps: int = 40_000,
) -> tuple[ParameterSchedule, float]:
    """Schedule whose optimal position stays closed on (T1, T2) and reopens.

    The drift is pinned at mu = sigma^2 + 2.  The tail value Y_{T2} is
    obtained by backward integration on [T2, T] with constant rho3, the
    curvature constant is kappa = exp(2(T - T2)) (1 - 2 Y_{T2}) / Y_{T2}^2,
    and the middle segment carries rho_t = (kappa e^{2(t-T)} + 1)^{-1/2} - 1.
    """
    if not (0.0 < T1 < T2 < T):
        raise ValueError("need 0 < T1 < T2 < T")
    if sigma == 0.0 or rho1 <= -1.0 or rho3 <= 0.0:
        raise ValueError("need sigma^2 > 0, rho1 > -1, rho3 > 0")
    mu = sigma**2 + 2.0

    tail = build_schedule(
        [ParameterSegment(0.0, T - T2, rho3, mu, sigma)], T - T2
    )
    y_t2 = float(solve_Y_backward(tail, max(1, int(round(n_steps / (T - T2))))).values[0])
    if not 0.0 < y_t2 < 0.5:
        raise DegenerateY(f"Y at T2 must lie in (0, 1/2), got {y_t2}")
    kappa = float(np.exp(2.0 * (T - T2)) * (1.0 - 2.0 * y_t2) / y_t2**2)

    schedule = build_schedule(
        [
            ParameterSegment(0.0, T1, rho1, mu, sigma),
            ParameterSegment(T1, T2, 0.0, mu, sigma,
                             rho_formula=RhoFormula("inv_sqrt_exp", kappa, T)),
            ParameterSegment(T2, T, rho3, mu, sigma),
        ],
        T,
    )
    return schedule, kappa


def verify_closure_identity(schedule: ParameterSchedule, Y: ValuePath) -> float:
    """Max |Y - (rho+1)/(rho+2)| on the interior of the formula segment."""
    seg = _formula_segment(schedule)
    inside = (Y.grid > seg.start + 1e-12) & (Y.grid < seg.end - 1e-12)
    rho = seg.rho_at(Y.grid[inside])
    return float(np.max(np.abs(Y.values[inside] - (rho + 1.0) / (rho + 2.0))))


def closure_identity_residual(kappa: float, T: float, times) -> float:
    """Pointwise residual of the algebraic identity behind the closed middle segment.

    -kappa e^{2(t-T)} (rho+1)^3/(rho+2)^2 = rho (rho+1)/(rho+2) with
    rho = (kappa e^{2(t-T)} + 1)^{-1/2} - 1 holds for every kappa > 0.
    """
    t = np.asarray(times, dtype=float)
    a = kappa * np.exp(2.0 * (t - T))
    rho = (a + 1.0) ** -0.5 - 1.0
    lhs = -a * (rho + 1.0) ** 3 / (rho + 2.0) ** 2
    rhs = rho * (rho + 1.0) / (rho + 2.0)
    return float(np.max(np.abs(lhs - rhs)))


def _formula_segment(schedule: ParameterSchedule) -> ParameterSegment:
    for s in schedule.segments:
        if s.rho_formula is not None:
            return s
    raise ValueError("schedule has no formula-valued segment")
