"""Growth-optimal portfolios, market time, and expected upcrossing-time bounds."""

from .analytics import (
    BoundReport,
    RatioRow,
    StrategyRow,
    asymptotic_ratio_study,
    check_estimate,
    strategy_comparison,
    theoretical_bounds,
)
from .growth import (
    GrowthSolution,
    RiskPremium,
    ViabilityReport,
    alpha_constant,
    growth_gradient,
    growth_hessian,
    growth_rate,
    immediate_arbitrage_check,
    maximize_growth,
    risk_premium,
)
from .markets import (
    ConstantCoefficients,
    ConstraintQuery,
    ItoMarketSpec,
    JumpAtom,
    LevyMarketSpec,
    MeanRevertingVolatility,
    PiecewiseCoefficients,
    SpecValidationError,
    in_constraint_set,
    in_recession_cone,
    spec_violations,
    validate_spec,
)
from .simulate import (
    ExperimentReport,
    PathRecord,
    Upcrossing,
    first_upcrossing,
    ig_first_passage_oracle,
    simulate_ito_log_wealth,
    simulate_levy_log_wealth,
    upcrossing_experiment,
)
from .specfile import load_spec, parse_spec
from .streams import replication_stream

__all__ = [
    "BoundReport",
    "ConstantCoefficients",
    "ConstraintQuery",
    "ExperimentReport",
    "GrowthSolution",
    "ItoMarketSpec",
    "JumpAtom",
    "LevyMarketSpec",
    "MeanRevertingVolatility",
    "PathRecord",
    "PiecewiseCoefficients",
    "RatioRow",
    "RiskPremium",
    "SpecValidationError",
    "StrategyRow",
    "Upcrossing",
    "ViabilityReport",
    "alpha_constant",
    "asymptotic_ratio_study",
    "check_estimate",
    "first_upcrossing",
    "growth_gradient",
    "growth_hessian",
    "growth_rate",
    "ig_first_passage_oracle",
    "immediate_arbitrage_check",
    "in_constraint_set",
    "in_recession_cone",
    "load_spec",
    "maximize_growth",
    "parse_spec",
    "replication_stream",
    "risk_premium",
    "simulate_ito_log_wealth",
    "simulate_levy_log_wealth",
    "spec_violations",
    "strategy_comparison",
    "theoretical_bounds",
    "upcrossing_experiment",
    "validate_spec",
]

__version__ = "0.1.0"
