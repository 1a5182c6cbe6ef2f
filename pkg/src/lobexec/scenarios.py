"""Registered canonical scenarios S1-S7.

S1-S3: three-regime deterministic schedules (sigma = 0) with middle-regime
resilience -0.05 / -0.09 / -0.15; S4-S6: the same regimes with sigma =
sqrt(0.1) and middle values -0.05 / -0.07 / -0.15; S7: the closed-interval
premature-closure construction with sigma = 1 and calibrated curvature.
All use x = 1, d = 0, gamma0 = 1 and horizon T = 3 with breaks at 1 and 2.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .effects import build_premature_closure_scenario
from .model import InitialCondition, ParameterSchedule, ParameterSegment, build_schedule


@dataclass(frozen=True)
class Scenario:
    name: str
    schedule: ParameterSchedule
    ic: InitialCondition
    kappa: float | None = None


_MIDDLE_RHO = {
    "S1": (-0.05, 0.0),
    "S2": (-0.09, 0.0),
    "S3": (-0.15, 0.0),
    "S4": (-0.05, 0.1**0.5),
    "S5": (-0.07, 0.1**0.5),
    "S6": (-0.15, 0.1**0.5),
}

SCENARIO_NAMES = ("S1", "S2", "S3", "S4", "S5", "S6", "S7")


def _three_regime(rho2: float, sigma: float) -> ParameterSchedule:
    mu = 0.5
    return build_schedule(
        [
            ParameterSegment(0.0, 1.0, 0.1, mu, sigma),
            ParameterSegment(1.0, 2.0, rho2, mu, sigma),
            ParameterSegment(2.0, 3.0, 1.0, mu, sigma),
        ],
        3.0,
    )


@lru_cache(maxsize=None)
def scenario(name: str) -> Scenario:
    ic = InitialCondition(x=1.0, d=0.0, gamma0=1.0)
    if name in _MIDDLE_RHO:
        rho2, sigma = _MIDDLE_RHO[name]
        return Scenario(name, _three_regime(rho2, sigma), ic)
    if name == "S7":
        schedule, kappa = build_premature_closure_scenario(
            T1=1.0, T2=2.0, T=3.0, sigma=1.0, rho1=0.01, rho3=1.0
        )
        return Scenario(name, schedule, ic, kappa=kappa)
    raise KeyError(f"unknown scenario {name!r}; expected one of {SCENARIO_NAMES}")
