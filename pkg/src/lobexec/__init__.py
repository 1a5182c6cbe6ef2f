"""Optimal trade execution in a limit order book with stochastic depth and signed resilience."""

from .cost import (
    BASELINE_NAMES,
    CostReport,
    TradeList,
    baseline_trades,
    cost_of_trades,
    discretize_strategy,
    expected_cost,
    perturbation_test,
)
from .effects import (
    GUARANTEE_FORCED_EFFECT,
    GUARANTEE_NO_EFFECTS,
    GUARANTEE_NO_OVERJUMP,
    PREMATURE_TOL,
    EffectReport,
    build_premature_closure_scenario,
    check_negative_resilience_trigger,
    check_positive_resilience_guarantee,
    classify_effects,
    closure_identity_residual,
    verify_closure_identity,
)
from .errors import (
    AssumptionViolated,
    DegenerateY,
    GapOrOverlap,
    LobexecError,
    OutOfRange,
    PreconditionViolated,
    StepFailure,
    TradeOutsideHorizon,
)
from .model import (
    InitialCondition,
    ParameterSchedule,
    ParameterSegment,
    RegimeChain,
    RhoFormula,
    build_schedule,
    eval_params,
    eval_params_left,
    make_grid,
    validate_assumptions,
)
from .regime import (
    RegimeValueSurface,
    beta_along_path,
    check_regime_bounds,
    sample_regime_path,
    solve_regime_Y,
)
from .scenarios import SCENARIO_NAMES, Scenario, scenario
from .simulate import (
    DeviationPath,
    PathBundle,
    StrategyPath,
    deviation_of_trades,
    exponential_Q,
    optimal_strategy_path,
    sample_gamma,
)
from .value_ode import (
    BetaPath,
    ValuePath,
    beta_from_Y,
    bsde_residual,
    closed_form_Y,
    read_path_csv,
    solve_Y_backward,
)

__version__ = "0.1.0"
