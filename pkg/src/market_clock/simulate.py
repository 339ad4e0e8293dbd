"""Monte Carlo simulation of log-wealth paths and upcrossing times.

Two schemes for Levy markets:

* ``event`` — jump times are sampled exactly (exponential clocks); within
  each inter-jump interval the first passage of the drifted Brownian part
  to the remaining barrier is sampled exactly (passage-probability test
  plus conditional hitting-time inversion, or a conditioned endpoint when
  the barrier is not hit).  No discretization bias.
* ``grid`` — Euler steps of size ``dt`` with Poisson jump counts per step;
  crossing is detected at step ends, giving a small documented upward bias
  on the calendar crossing time.

Ito markets use the grid scheme; the market clock accumulates half the
squared risk premium by the trapezoid rule.

All paths are tracked in barrier-gap coordinates (``log(level/x)`` minus
accumulated log-return), which makes the experiment exactly invariant
under joint scaling of ``(x, level)``.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import log_ndtr

from .growth import GrowthSolution, maximize_growth, risk_premium
from .markets import (
    ConstantCoefficients,
    ItoMarketSpec,
    LevyMarketSpec,
    MeanRevertingVolatility,
    PiecewiseCoefficients,
)
from .streams import replication_stream

logger = logging.getLogger(__name__)

CHUNK = 4096        # fixed per-stream draw block for grid schemes
REP_BATCH = 2048    # replication batch width for vectorized stepping
BUDGET_MULTIPLE = 50.0


class InfeasiblePortfolioError(ValueError):
    """Strategy lies outside the natural constraint set of the market."""


class RiskPremiumUnsolvableError(RuntimeError):
    """No numeraire portfolio at some step: c rho = a has no solution."""

    def __init__(self, step: int):
        super().__init__(f"risk premium unsolvable at step {step}")
        self.step = step


@dataclass
class PathRecord:
    """One sampled path of (calendar time, market time, log wealth).

    ``atom`` is the atom index for jump events (-1 for diffusion events;
    the grid scheme lumps same-step jumps and reports -1 with the summed
    ``jump_size``).  Terminal summary fields are nan when not reached.
    """

    t: np.ndarray
    market_time: np.ndarray
    log_wealth: np.ndarray
    is_jump: np.ndarray
    atom: np.ndarray
    jump_size: np.ndarray
    status: str
    tau: float = math.nan
    market_T: float = math.nan
    overshoot: float = math.nan

    @property
    def reached(self) -> bool:
        return self.status == "reached"


@dataclass
class ExperimentReport:
    """Aggregated Monte Carlo upcrossing experiment."""

    reps: int
    mean_T: float
    stderr_T: float
    reached_fraction: float
    overshoot_samples: np.ndarray
    scheme: str
    seed: int
    x: float
    level: float
    market_time_budget: float
    tau: np.ndarray
    T: np.ndarray
    overshoot: np.ndarray
    reached: np.ndarray


@dataclass
class Upcrossing:
    T: float
    tau: float
    overshoot: float


# ---------------------------------------------------------------------------
# Levy portfolio law


@dataclass(frozen=True)
class _LevyLaw:
    b: float                 # compensated drift of log wealth between jumps
    v: float                 # diffusion variance per unit time
    total_rate: float
    rates: np.ndarray
    jump_logs: np.ndarray    # log(1 + <pi, z_k>); -inf when wealth is wiped out


def _portfolio_law(spec: LevyMarketSpec, pi: np.ndarray, eps_feas: float = 1e-12) -> _LevyLaw:
    pi = np.atleast_1d(np.asarray(pi, dtype=float))
    Z = spec.jump_matrix
    rates = spec.jump_rates
    if Z.shape[0]:
        q = 1.0 + Z @ pi
        if np.any(q < -eps_feas):
            raise InfeasiblePortfolioError("pi violates a jump constraint")
        with np.errstate(divide="ignore"):
            jump_logs = np.where(q > 0.0, np.log(np.maximum(q, 1e-300)), -math.inf)
        comp = float(rates @ (q - 1.0))
    else:
        jump_logs = np.zeros(0)
        comp = 0.0
    v = float(pi @ spec.c @ pi)
    b = float(pi @ spec.a) - 0.5 * v - comp
    return _LevyLaw(
        b=b, v=max(v, 0.0), total_rate=float(rates.sum()) if len(rates) else 0.0,
        rates=rates, jump_logs=jump_logs,
    )


# ---------------------------------------------------------------------------
# Exact first-passage machinery for drifted Brownian motion


def _bm_max_cdf(h: float, b: float, v: float, s: float) -> float:
    """P(max over [0, s] of BM with drift b, variance v reaches h > 0)."""
    if h <= 0.0:
        return 1.0
    if s <= 0.0 or v <= 0.0:
        return 0.0
    sv = math.sqrt(v * s)
    t1 = math.exp(log_ndtr((b * s - h) / sv))
    e = 2.0 * b * h / v + log_ndtr((-h - b * s) / sv)
    t2 = math.exp(e) if e < 0.0 else 1.0
    return min(1.0, t1 + t2)


def _passage_time_inverse(h: float, b: float, v: float, s: float, u: float) -> float:
    """Solve P(hit by t) = u for t in (0, s]; requires u <= P(hit by s)."""
    lo = s * 1e-14
    if _bm_max_cdf(h, b, v, lo) >= u:
        return lo
    return brentq(
        lambda t: _bm_max_cdf(h, b, v, t) - u,
        lo, s, xtol=max(s * 1e-15, 1e-300), rtol=1e-12,
    )


# ---------------------------------------------------------------------------
# Event scheme (exact for Levy markets)


def _levy_event_path(law: _LevyLaw, h0: float, g_star: float, rng, budget_T: float,
                     record: bool):
    """One exact path in gap coordinates; barrier sits at ``h0``.

    Returns (tau, T, overshoot, status, events) where events is None unless
    ``record``.
    """
    events = [(0.0, 0.0, 0.0, False, -1, 0.0)] if record else None
    if h0 <= 0.0:
        return 0.0, 0.0, -h0, "reached", _event_arrays(events)
    tau_budget = budget_T / g_star
    b, v, lam = law.b, law.v, law.total_rate
    pos = 0.0   # accumulated log-return
    t = 0.0
    n_atoms = len(law.jump_logs)
    cum_rates = np.cumsum(law.rates) if n_atoms else None
    while True:
        remaining = tau_budget - t
        if remaining <= 0.0:
            return math.nan, math.nan, math.nan, "budget", _event_arrays(events)
        h = h0 - pos
        if lam > 0.0:
            E = rng.exponential(1.0 / lam)
        else:
            E = math.inf
        s = min(E, remaining)
        capped = s < E
        if v > 0.0:
            if lam == 0.0 and b > 0.0:
                # atom-free market with upward drift: hitting time is exact
                # inverse Gaussian
                t_hit = rng.wald(h / b, h * h / v)
                if t_hit <= remaining:
                    t += t_hit
                    if record:
                        events.append((t, g_star * t, h0, False, -1, 0.0))
                    return t, g_star * t, 0.0, "reached", _event_arrays(events)
                return math.nan, math.nan, math.nan, "budget", _event_arrays(events)
            p = _bm_max_cdf(h, b, v, s)
            u = rng.random()
            if u < p:
                t_hit = _passage_time_inverse(h, b, v, s, u)
                t += t_hit
                if record:
                    events.append((t, g_star * t, h0, False, -1, 0.0))
                return t, g_star * t, 0.0, "reached", _event_arrays(events)
            # endpoint conditioned on not hitting the barrier in [0, s]
            mean, sd = b * s, math.sqrt(v * s)
            two_h_over_vs = 2.0 * h / (v * s)
            while True:
                y = mean + sd * rng.standard_normal()
                if y >= h:
                    continue
                if rng.random() < 1.0 - math.exp(-two_h_over_vs * (h - y)):
                    break
            pos += y
            t += s
        else:
            if b > 0.0 and h <= b * s:
                t += h / b
                if record:
                    events.append((t, g_star * t, h0, False, -1, 0.0))
                return t, g_star * t, 0.0, "reached", _event_arrays(events)
            pos += b * s
            t += s
        if capped:
            return math.nan, math.nan, math.nan, "budget", _event_arrays(events)
        # a jump fires at calendar time t
        k = int(np.searchsorted(cum_rates, rng.random() * lam, side="right"))
        k = min(k, n_atoms - 1)
        jl = law.jump_logs[k]
        pos += jl
        if record:
            events.append((t, g_star * t, pos, True, k, jl))
        if pos >= h0:
            return t, g_star * t, pos - h0, "reached", _event_arrays(events)
        if pos == -math.inf:
            return math.nan, math.nan, math.nan, "absorbed", _event_arrays(events)


def _event_arrays(events):
    if events is None:
        return None
    arr = np.array([e[:3] for e in events], dtype=float)
    return (
        arr[:, 0], arr[:, 1], arr[:, 2],
        np.array([e[3] for e in events], dtype=bool),
        np.array([e[4] for e in events], dtype=int),
        np.array([e[5] for e in events], dtype=float),
    )


# ---------------------------------------------------------------------------
# Grid scheme for Levy markets (vectorized across replications)


def _levy_grid_batch(law: _LevyLaw, h0: float, g_star: float, dt: float, budget_T: float,
                     master_seed: int, rep_lo: int, rep_hi: int, record: bool = False):
    B = rep_hi - rep_lo
    tau = np.full(B, math.nan)
    T = np.full(B, math.nan)
    over = np.full(B, math.nan)
    reached = np.zeros(B, dtype=bool)
    recorded = None
    if h0 <= 0.0:
        tau[:] = 0.0
        T[:] = 0.0
        over[:] = -h0
        reached[:] = True
        return tau, T, over, reached, recorded
    n_atoms = len(law.jump_logs)
    jl = np.where(np.isfinite(law.jump_logs), law.jump_logs, -1e300)
    sd = math.sqrt(law.v * dt)
    n_budget = max(1, math.ceil(budget_T / g_star / dt))
    rngs = [replication_stream(master_seed, r) for r in range(rep_lo, rep_hi)]
    pos = np.zeros(B)
    active = np.arange(B)
    steps_done = 0
    rec_inc = [] if (record and B == 1) else None
    rec_jump = [] if (record and B == 1) else None
    while active.size and steps_done < n_budget:
        K = min(CHUNK, n_budget - steps_done)
        inc = np.empty((active.size, K))
        jump_part = np.zeros((active.size, K)) if n_atoms else None
        for i, ridx in enumerate(active):
            g = rngs[ridx]
            z = g.standard_normal(CHUNK)[:K]
            row = law.b * dt + sd * z
            if n_atoms:
                cnt = g.poisson(law.rates * dt, size=(CHUNK, n_atoms))[:K]
                jp = cnt @ jl
                jump_part[i] = jp
                row = row + jp
            inc[i] = row
        cum = np.cumsum(inc, axis=1) + pos[active][:, None]
        crossed = cum >= h0
        hit_any = crossed.any(axis=1)
        idx = crossed.argmax(axis=1)
        if rec_inc is not None:
            stop = (idx[0] + 1) if hit_any[0] else K
            rec_inc.append(cum[0, :stop].copy())
            rec_jump.append(jump_part[0, :stop].copy() if n_atoms else np.zeros(stop))
        hits = active[hit_any]
        if hits.size:
            tau[hits] = (steps_done + idx[hit_any] + 1) * dt
            T[hits] = g_star * tau[hits]
            over[hits] = cum[hit_any, idx[hit_any]] - h0
            reached[hits] = True
        rest = ~hit_any
        pos[active[rest]] = cum[rest, -1]
        active = active[rest]
        steps_done += K
    if rec_inc is not None:
        path = np.concatenate(rec_inc)
        jumps = np.concatenate(rec_jump)
        n = len(path)
        t_grid = dt * np.arange(1, n + 1)
        recorded = (
            np.concatenate([[0.0], t_grid]),
            np.concatenate([[0.0], g_star * t_grid]),
            np.concatenate([[0.0], path]),
            np.concatenate([[False], jumps != 0.0]),
            np.full(n + 1, -1, dtype=int),
            np.concatenate([[0.0], jumps]),
        )
    return tau, T, over, reached, recorded


# ---------------------------------------------------------------------------
# Ito markets (grid scheme)


def _node_lambda_sq(model, t_nodes: np.ndarray, step_offset: int) -> np.ndarray:
    """Squared risk premium at grid nodes for a deterministic model."""
    if isinstance(model, ConstantCoefficients):
        rp = risk_premium(model.a, model.sigma)
        if not rp.solvable:
            raise RiskPremiumUnsolvableError(step_offset)
        return np.full(len(t_nodes), rp.lambda_sq)
    a_path, sigma_path = model.node_values(t_nodes)
    out = np.empty(len(t_nodes))
    cache: dict[int, float] = {}
    if isinstance(model, PiecewiseCoefficients):
        seg = np.clip(
            np.searchsorted(model.times, t_nodes, side="right") - 1, 0, len(model.times) - 1
        )
        for j, s in enumerate(seg):
            s = int(s)
            if s not in cache:
                rp = risk_premium(a_path[j], sigma_path[j])
                if not rp.solvable:
                    raise RiskPremiumUnsolvableError(step_offset + j)
                cache[s] = rp.lambda_sq
            out[j] = cache[s]
        return out
    for j in range(len(t_nodes)):
        rp = risk_premium(a_path[j], sigma_path[j])
        if not rp.solvable:
            raise RiskPremiumUnsolvableError(step_offset + j)
        out[j] = rp.lambda_sq
    return out


def _node_strategy_moments(model, strategy, t_nodes: np.ndarray, lam_sq: np.ndarray):
    """Per-node (drift, variance) per unit time for the chosen strategy."""
    if isinstance(strategy, str):  # numeraire
        return 0.5 * lam_sq, lam_sq
    pi = np.atleast_1d(np.asarray(strategy, dtype=float))
    a_path, sigma_path = model.node_values(t_nodes)
    c_pi = np.einsum("tij,tkj,k->ti", sigma_path, sigma_path, pi)
    var = np.einsum("ti,i->t", c_pi, pi)
    mu = np.einsum("ti,i->t", a_path, pi) - 0.5 * var
    return mu, var


def _ito_deterministic_layout(model, strategy, dt: float, budget_T: float, max_steps: int):
    """Precompute per-step drift/sd and the market-time node values."""
    mu_steps, sd_steps, o_nodes = [], [], [np.zeros(1)]
    gs_prev = None
    n = 0
    o = 0.0
    while o < budget_T and n < max_steps:
        K = min(CHUNK, max_steps - n)
        t_nodes = dt * np.arange(n, n + K + 1)
        lam_sq = _node_lambda_sq(model, t_nodes, n)
        gs = 0.5 * lam_sq
        if gs_prev is not None:
            gs[0] = gs_prev  # stitch blocks at the shared node
        mu, var = _node_strategy_moments(model, strategy, t_nodes, lam_sq)
        mu_steps.append(mu[:-1] * dt)
        sd_steps.append(np.sqrt(np.maximum(var[:-1], 0.0) * dt))
        o_inc = 0.5 * (gs[:-1] + gs[1:]) * dt
        o_nodes.append(o + np.cumsum(o_inc))
        o = float(o_nodes[-1][-1])
        gs_prev = gs[-1]
        n += K
    mu_all = np.concatenate(mu_steps)
    sd_all = np.concatenate(sd_steps)
    o_all = np.concatenate(o_nodes)
    keep = int(np.searchsorted(o_all, budget_T, side="left"))
    keep = min(max(keep, 1), len(mu_all))
    return mu_all[:keep], sd_all[:keep], o_all[: keep + 1]


def _ito_grid_deterministic(model, strategy, h0: float, dt: float, budget_T: float,
                            master_seed: int, rep_lo: int, rep_hi: int,
                            max_steps: int, record: bool = False):
    B = rep_hi - rep_lo
    tau = np.full(B, math.nan)
    T = np.full(B, math.nan)
    over = np.full(B, math.nan)
    reached = np.zeros(B, dtype=bool)
    recorded = None
    if h0 <= 0.0:
        tau[:] = 0.0
        T[:] = 0.0
        over[:] = -h0
        reached[:] = True
        return tau, T, over, reached, recorded
    mu, sdv, o_nodes = _ito_deterministic_layout(model, strategy, dt, budget_T, max_steps)
    n_steps = len(mu)
    rngs = [replication_stream(master_seed, r) for r in range(rep_lo, rep_hi)]
    pos = np.zeros(B)
    active = np.arange(B)
    steps_done = 0
    rec_path = [] if (record and B == 1) else None
    while active.size and steps_done < n_steps:
        K = min(CHUNK, n_steps - steps_done)
        sl = slice(steps_done, steps_done + K)
        inc = np.empty((active.size, K))
        for i, ridx in enumerate(active):
            z = rngs[ridx].standard_normal(CHUNK)[:K]
            inc[i] = mu[sl] + sdv[sl] * z
        cum = np.cumsum(inc, axis=1) + pos[active][:, None]
        crossed = cum >= h0
        hit_any = crossed.any(axis=1)
        idx = crossed.argmax(axis=1)
        if rec_path is not None:
            stop = (idx[0] + 1) if hit_any[0] else K
            rec_path.append(cum[0, :stop].copy())
        hits = active[hit_any]
        if hits.size:
            steps_at_hit = steps_done + idx[hit_any] + 1
            tau[hits] = steps_at_hit * dt
            T[hits] = o_nodes[steps_at_hit]
            over[hits] = cum[hit_any, idx[hit_any]] - h0
            reached[hits] = True
        rest = ~hit_any
        pos[active[rest]] = cum[rest, -1]
        active = active[rest]
        steps_done += K
    if rec_path is not None:
        path = np.concatenate(rec_path)
        n = len(path)
        recorded = (
            dt * np.arange(0, n + 1),
            o_nodes[: n + 1].copy(),
            np.concatenate([[0.0], path]),
            np.zeros(n + 1, dtype=bool),
            np.full(n + 1, -1, dtype=int),
            np.zeros(n + 1),
        )
    return tau, T, over, reached, recorded


def _ito_grid_stochastic(model: MeanRevertingVolatility, strategy, h0: float, dt: float,
                         budget_T: float, master_seed: int, rep_lo: int, rep_hi: int,
                         max_steps: int, record: bool = False):
    B = rep_hi - rep_lo
    tau = np.full(B, math.nan)
    T = np.full(B, math.nan)
    over = np.full(B, math.nan)
    reached = np.zeros(B, dtype=bool)
    recorded = None
    if h0 <= 0.0:
        tau[:] = 0.0
        T[:] = 0.0
        over[:] = -h0
        reached[:] = True
        return tau, T, over, reached, recorded

    rp0 = risk_premium(model.a, model.sigma)
    if not rp0.solvable:
        raise RiskPremiumUnsolvableError(0)
    lam_sq0 = rp0.lambda_sq
    numeraire = isinstance(strategy, str)
    if not numeraire:
        pi = np.atleast_1d(np.asarray(strategy, dtype=float))
        c0 = model.sigma @ model.sigma.T
        pcp = float(pi @ c0 @ pi)
        pa = float(pi @ model.a)

    rng_w = [replication_stream(master_seed, r, 0) for r in range(rep_lo, rep_hi)]
    rng_y = [replication_stream(master_seed, r, 1) for r in range(rep_lo, rep_hi)]
    pos = np.zeros(B)
    y = np.full(B, model.y0)
    o = np.zeros(B)
    gs = np.full(B, 0.5 * lam_sq0 * math.exp(-2.0 * model.y0))
    active = np.arange(B)
    sqdt = math.sqrt(dt)
    steps_done = 0
    rec = ([0.0], [0.0], [0.0]) if (record and B == 1) else None
    while active.size and steps_done < max_steps:
        K = min(CHUNK, max_steps - steps_done)
        nw = np.empty((active.size, K))
        ny = np.empty((active.size, K))
        for i, ridx in enumerate(active):
            nw[i] = rng_w[ridx].standard_normal(CHUNK)[:K]
            ny[i] = rng_y[ridx].standard_normal(CHUNK)[:K]
        done_local = np.zeros(active.size, dtype=bool)
        pa_ = pos[active].copy()
        ya = y[active].copy()
        oa = o[active].copy()
        ga = gs[active].copy()
        for k in range(K):
            scale = np.exp(2.0 * ya)
            if numeraire:
                lam_sq = lam_sq0 / scale
                mu = 0.5 * lam_sq * dt
                var = lam_sq * dt
            else:
                mu = (pa - 0.5 * pcp * scale) * dt
                var = pcp * scale * dt
            live = ~done_local
            pa_[live] = pa_[live] + mu[live] + np.sqrt(var[live]) * nw[live, k]
            ya[live] = ya[live] + model.kappa * (model.theta - ya[live]) * dt \
                + model.xi * sqdt * ny[live, k]
            g_next = 0.5 * lam_sq0 * np.exp(-2.0 * ya)
            oa[live] = oa[live] + 0.5 * (ga[live] + g_next[live]) * dt
            ga[live] = g_next[live]
            if rec is not None and live[0]:
                rec[0].append((steps_done + k + 1) * dt)
                rec[1].append(float(oa[0]))
                rec[2].append(float(pa_[0]))
            hit = live & (pa_ >= h0)
            if np.any(hit):
                g_hit = active[hit]
                tau[g_hit] = (steps_done + k + 1) * dt
                T[g_hit] = oa[hit]
                over[g_hit] = pa_[hit] - h0
                reached[g_hit] = True
                done_local |= hit
            exhausted = live & (oa >= budget_T)
            done_local |= exhausted
        pos[active] = pa_
        y[active] = ya
        o[active] = oa
        gs[active] = ga
        active = active[~done_local]
        steps_done += K
    if rec is not None:
        n = len(rec[0])
        recorded = (
            np.array(rec[0]),
            np.array(rec[1]),
            np.array(rec[2]),
            np.zeros(n, dtype=bool),
            np.full(n, -1, dtype=int),
            np.zeros(n),
        )
    return tau, T, over, reached, recorded


# ---------------------------------------------------------------------------
# Public single-path API


def _make_record(recorded, status, tau, T, over) -> PathRecord:
    t, o, lw, isj, atom, jsz = recorded
    return PathRecord(
        t=t, market_time=o, log_wealth=lw, is_jump=isj, atom=atom, jump_size=jsz,
        status=status, tau=tau, market_T=T, overshoot=over,
    )


def simulate_levy_log_wealth(
    spec: LevyMarketSpec,
    pi: np.ndarray,
    x: float,
    level: float,
    growth: GrowthSolution,
    scheme: str = "event",
    dt: float = 1e-3,
    master_seed: int = 0,
    rep: int = 0,
    market_time_budget: float | None = None,
) -> PathRecord:
    """Sample one log-wealth path until upcrossing or market-time budget.

    ``growth`` supplies the market-time velocity g*.  Paths are recorded in
    gap coordinates shifted back to absolute log wealth.
    """
    if x <= 0 or level <= 0:
        raise ValueError("x and level must be positive")
    if scheme == "grid" and dt <= 0:
        raise ValueError("dt must be positive for the grid scheme")
    h0 = math.log(level / x)
    budget = market_time_budget
    if budget is None:
        budget = BUDGET_MULTIPLE * h0 if h0 > 0 else 1.0
    law = _portfolio_law(spec, pi)
    if scheme == "event":
        rng = replication_stream(master_seed, rep)
        tau, T, over, status, events = _levy_event_path(
            law, h0, growth.g_star, rng, budget, record=True
        )
        recorded = events
    elif scheme == "grid":
        tau_a, T_a, over_a, reached_a, recorded = _levy_grid_batch(
            law, h0, growth.g_star, dt, budget, master_seed, rep, rep + 1, record=True
        )
        status = "reached" if reached_a[0] else "budget"
        tau, T, over = tau_a[0], T_a[0], over_a[0]
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    rec = _make_record(recorded, status, tau, T, over)
    rec.log_wealth = rec.log_wealth + math.log(x)
    return rec


def simulate_ito_log_wealth(
    spec: ItoMarketSpec,
    strategy,
    x: float,
    level: float,
    dt: float = 1e-3,
    master_seed: int = 0,
    rep: int = 0,
    market_time_budget: float | None = None,
    max_steps: int = 2_000_000,
) -> PathRecord:
    """Euler path of log wealth in an Ito market; market time by trapezoid.

    ``strategy`` is ``"numeraire"`` or a constant proportion vector.
    """
    if x <= 0 or level <= 0:
        raise ValueError("x and level must be positive")
    if dt <= 0:
        raise ValueError("dt must be positive")
    h0 = math.log(level / x)
    budget = market_time_budget
    if budget is None:
        budget = BUDGET_MULTIPLE * h0 if h0 > 0 else 1.0
    model = spec.coefficient_model
    if model.deterministic:
        tau_a, T_a, over_a, reached_a, recorded = _ito_grid_deterministic(
            model, strategy, h0, dt, budget, master_seed, rep, rep + 1, max_steps,
            record=True,
        )
    else:
        tau_a, T_a, over_a, reached_a, recorded = _ito_grid_stochastic(
            model, strategy, h0, dt, budget, master_seed, rep, rep + 1, max_steps,
            record=True,
        )
    status = "reached" if reached_a[0] else "budget"
    rec = _make_record(recorded, status, tau_a[0], T_a[0], over_a[0])
    rec.log_wealth = rec.log_wealth + math.log(x)
    return rec


def first_upcrossing(path: PathRecord, level: float) -> Upcrossing | None:
    """First event at which recorded log wealth reaches log(level).

    Returns None when the path never reaches the level.
    """
    if level <= 0:
        raise ValueError("level must be positive")
    logl = math.log(level)
    above = path.log_wealth >= logl - 1e-12
    if not np.any(above):
        return None
    i = int(np.argmax(above))
    return Upcrossing(
        T=float(path.market_time[i]),
        tau=float(path.t[i]),
        overshoot=max(0.0, float(path.log_wealth[i] - logl)),
    )


# ---------------------------------------------------------------------------
# Monte Carlo experiment


def _split_ranges(reps: int, width: int):
    return [(lo, min(lo + width, reps)) for lo in range(0, reps, width)]


def upcrossing_experiment(
    spec: LevyMarketSpec | ItoMarketSpec,
    strategy,
    x: float,
    level: float,
    reps: int,
    scheme: str = "event",
    dt: float = 1e-3,
    master_seed: int = 0,
    growth: GrowthSolution | None = None,
    market_time_budget: float | None = None,
    n_workers: int = 1,
    max_steps: int = 2_000_000,
) -> ExperimentReport:
    """Monte Carlo estimate of the expected market time to upcross ``level``.

    Replications draw from counter-based streams keyed by
    ``(master_seed, rep)``; the aggregation is in replication order, so the
    result is identical for any worker count.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    if x <= 0 or level <= 0:
        raise ValueError("x and level must be positive")
    h0 = math.log(level / x)
    budget = market_time_budget
    if budget is None:
        budget = BUDGET_MULTIPLE * h0 if h0 > 0 else 1.0

    tau = np.full(reps, math.nan)
    T = np.full(reps, math.nan)
    over = np.full(reps, math.nan)
    reached = np.zeros(reps, dtype=bool)

    if isinstance(spec, ItoMarketSpec):
        scheme = "grid"
        model = spec.coefficient_model
        engine = _ito_grid_deterministic if model.deterministic else _ito_grid_stochastic

        def run_range(lo, hi):
            return engine(model, strategy, h0, dt, budget, master_seed, lo, hi, max_steps)[:4]

    else:
        if growth is None:
            growth = maximize_growth(spec)
        if not growth.viable:
            raise ValueError("market is not viable; no numeraire portfolio")
        pi = growth.rho if isinstance(strategy, str) else np.asarray(strategy, dtype=float)
        law = _portfolio_law(spec, pi)
        g_star = growth.g_star
        if scheme == "event":

            def run_range(lo, hi):
                out = (np.empty(hi - lo), np.empty(hi - lo), np.empty(hi - lo),
                       np.zeros(hi - lo, dtype=bool))
                for r in range(lo, hi):
                    rng = replication_stream(master_seed, r)
                    t_, T_, o_, status, _ = _levy_event_path(
                        law, h0, g_star, rng, budget, record=False
                    )
                    out[0][r - lo], out[1][r - lo], out[2][r - lo] = t_, T_, o_
                    out[3][r - lo] = status == "reached"
                return out

        elif scheme == "grid":
            if dt <= 0:
                raise ValueError("dt must be positive for the grid scheme")

            def run_range(lo, hi):
                return _levy_grid_batch(law, h0, g_star, dt, budget, master_seed, lo, hi)[:4]

        else:
            raise ValueError(f"unknown scheme {scheme!r}")

    ranges = _split_ranges(reps, REP_BATCH)
    if n_workers and n_workers > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(lambda r: run_range(*r), ranges))
    else:
        results = [run_range(*r) for r in ranges]
    for (lo, hi), (t_, T_, o_, r_) in zip(ranges, results):
        tau[lo:hi] = t_
        T[lo:hi] = T_
        over[lo:hi] = o_
        reached[lo:hi] = r_

    n_ok = int(reached.sum())
    if n_ok < reps:
        logger.warning(
            "%d of %d replications exhausted the market-time budget %.6g; "
            "they are excluded from mean_T (downward bias)",
            reps - n_ok, reps, budget,
        )
    if n_ok:
        valid = T[reached]
        mean_T = float(valid.mean())
        stderr = float(valid.std(ddof=1) / math.sqrt(n_ok)) if n_ok > 1 else math.nan
    else:
        mean_T = math.nan
        stderr = math.nan
    return ExperimentReport(
        reps=reps,
        mean_T=mean_T,
        stderr_T=stderr,
        reached_fraction=n_ok / reps,
        overshoot_samples=over[reached],
        scheme=scheme,
        seed=master_seed,
        x=x,
        level=level,
        market_time_budget=budget,
        tau=tau,
        T=T,
        overshoot=over,
        reached=reached,
    )


def ig_first_passage_oracle(b: float, reps: int, rng: np.random.Generator) -> np.ndarray:
    """Exact market-time samples for a continuous market, barrier at b log-units.

    In market time the log numeraire is Brownian motion with drift 1 and
    variance 2, so the passage time to b is inverse Gaussian with mean b and
    shape b^2 / 2.
    """
    if b < 0:
        raise ValueError("barrier must be nonnegative")
    if b == 0.0:
        return np.zeros(reps)
    return rng.wald(b, b * b / 2.0, size=reps)
