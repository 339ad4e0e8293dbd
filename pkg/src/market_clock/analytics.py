"""Theoretical upcrossing-time bounds and Monte Carlo consistency studies.

The expected market time for the numeraire portfolio to upcross level l
from capital x is sandwiched between log(l/x) and log(l/x) + log(1 + alpha),
where alpha bounds the relative upward jumps of the numeraire.  For
continuous markets the interval degenerates to log(l/x).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .growth import GrowthSolution, growth_rate, maximize_growth
from .markets import ItoMarketSpec, LevyMarketSpec
from .simulate import ExperimentReport, upcrossing_experiment


@dataclass
class BoundReport:
    """Value-function bounds for one (x, level) pair."""

    x: float
    level: float
    lower: float
    upper: float
    alpha_used: float


@dataclass
class RatioRow:
    """One level of an asymptotic-ratio study."""

    level: float
    log_level: float
    mean_T: float
    stderr_T: float
    ratio: float
    band_lo: float
    band_hi: float


@dataclass
class StrategyRow:
    """One strategy of a comparison study."""

    name: str
    pi: np.ndarray | None
    mean_T: float
    stderr_T: float
    reached_fraction: float
    exact_T: float | None
    rank: int = -1


def theoretical_bounds(x: float, level: float, alpha: float) -> BoundReport:
    """Bounds (log(l/x), log(l/x) + log(1 + alpha)); both 0 when level <= x."""
    if x <= 0 or level <= 0:
        raise ValueError("x and level must be positive")
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if level <= x:
        return BoundReport(x=x, level=level, lower=0.0, upper=0.0, alpha_used=alpha)
    lower = math.log(level / x)
    return BoundReport(
        x=x, level=level, lower=lower, upper=lower + math.log1p(alpha), alpha_used=alpha
    )


def plugin_log1p_alpha(max_relative_jumps: np.ndarray) -> float:
    """Sample-based E[log(1 + alpha)] from per-path maximal relative jumps.

    Plug-in for markets where the jump bound is random rather than a
    constant; returns inf when any path had an unbounded jump.
    """
    m = np.maximum(np.asarray(max_relative_jumps, dtype=float), 0.0)
    return float(np.mean(np.log1p(m)))


def check_estimate(
    report: ExperimentReport, bounds: BoundReport, k_sigma: float = 3.0
) -> str:
    """Verdict 'consistent' | 'lower-violation' | 'upper-violation'.

    Requires reached_fraction >= 0.999 so that truncation bias stays below
    the statistical resolution.
    """
    if report.reached_fraction < 0.999:
        raise ValueError(
            f"reached_fraction {report.reached_fraction:.4f} too low for a bound check"
        )
    slack = k_sigma * report.stderr_T if np.isfinite(report.stderr_T) else 0.0
    if report.mean_T + slack < bounds.lower:
        return "lower-violation"
    if report.mean_T - slack > bounds.upper:
        return "upper-violation"
    return "consistent"


def asymptotic_ratio_study(
    spec: LevyMarketSpec | ItoMarketSpec,
    x: float,
    levels: list[float],
    reps: int,
    master_seed: int = 0,
    scheme: str = "event",
    dt: float = 1e-3,
    growth: GrowthSolution | None = None,
    n_workers: int = 1,
) -> list[RatioRow]:
    """Per level: mean market time and its ratio to log(level/x).

    The theoretical band [1, 1 + log(1+alpha)/log(level/x)] contains the
    ratio up to Monte Carlo noise and shrinks to {1} for large levels.
    """
    if not levels:
        raise ValueError("levels must be non-empty")
    if growth is None and isinstance(spec, LevyMarketSpec):
        growth = maximize_growth(spec)
    alpha = growth.alpha if growth is not None else 0.0
    rows = []
    for level in levels:
        denom = math.log(level / x) if level > x else 0.0
        if denom <= 0.0:
            rows.append(RatioRow(level, denom, 0.0, 0.0, 0.0, 0.0, 0.0))
            continue
        rep = upcrossing_experiment(
            spec, "numeraire", x, level, reps, scheme=scheme, dt=dt,
            master_seed=master_seed, growth=growth, n_workers=n_workers,
        )
        rows.append(
            RatioRow(
                level=level,
                log_level=denom,
                mean_T=rep.mean_T,
                stderr_T=rep.stderr_T,
                ratio=rep.mean_T / denom,
                band_lo=1.0,
                band_hi=1.0 + math.log1p(alpha) / denom,
            )
        )
    return rows


def strategy_comparison(
    spec: LevyMarketSpec | ItoMarketSpec,
    strategies: list,
    x: float,
    level: float,
    reps: int,
    master_seed: int = 0,
    scheme: str = "event",
    dt: float = 1e-3,
    growth: GrowthSolution | None = None,
    n_workers: int = 1,
) -> list[StrategyRow]:
    """Rank constant-proportion strategies plus the numeraire by mean market time.

    For atom-free Levy markets each constant strategy also gets the exact
    expectation g* log(level/x) / g(pi).  Strategies that never reach the
    level rank last with infinite mean.
    """
    if growth is None and isinstance(spec, LevyMarketSpec):
        growth = maximize_growth(spec)
    rows: list[StrategyRow] = []
    continuous_levy = isinstance(spec, LevyMarketSpec) and not spec.atoms
    h0 = math.log(level / x)
    entries = [("numeraire", "numeraire")] + [
        (f"pi={np.atleast_1d(np.asarray(pi, float))}", pi) for pi in strategies
    ]
    for name, strat in entries:
        try:
            rep = upcrossing_experiment(
                spec, strat, x, level, reps, scheme=scheme, dt=dt,
                master_seed=master_seed, growth=growth, n_workers=n_workers,
            )
        except ValueError as exc:
            rows.append(StrategyRow(name, None if isinstance(strat, str) else np.asarray(strat, float),
                                    math.inf, math.nan, 0.0, None))
            continue
        exact = None
        if continuous_levy and growth is not None:
            pi_vec = growth.rho if isinstance(strat, str) else np.atleast_1d(np.asarray(strat, float))
            g_pi = growth_rate(pi_vec, spec)
            exact = growth.g_star * h0 / g_pi if g_pi > 0 else math.inf
        mean = rep.mean_T if rep.reached_fraction > 0 else math.inf
        if rep.reached_fraction < 0.999 and math.isfinite(mean):
            mean = math.inf  # too truncated to trust; report as not reached
        rows.append(
            StrategyRow(
                name=name,
                pi=None if isinstance(strat, str) else np.atleast_1d(np.asarray(strat, float)),
                mean_T=mean,
                stderr_T=rep.stderr_T,
                reached_fraction=rep.reached_fraction,
                exact_T=exact,
            )
        )
    order = np.argsort([r.mean_T for r in rows], kind="stable")
    for rank, i in enumerate(order):
        rows[i].rank = rank
    rows.sort(key=lambda r: r.rank)
    return rows
