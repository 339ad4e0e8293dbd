"""Path simulation, upcrossing detection, and Monte Carlo experiments."""

import math

import numpy as np
import pytest

from market_clock import (
    ConstantCoefficients,
    ItoMarketSpec,
    JumpAtom,
    LevyMarketSpec,
    MeanRevertingVolatility,
    PiecewiseCoefficients,
    first_upcrossing,
    ig_first_passage_oracle,
    maximize_growth,
    replication_stream,
    simulate_ito_log_wealth,
    simulate_levy_log_wealth,
    upcrossing_experiment,
    validate_spec,
)

BS1 = validate_spec(LevyMarketSpec(d=1, m=1, a=[0.08], c=[[0.04]]))
J1 = validate_spec(
    LevyMarketSpec(d=1, m=1, a=[0.1], c=[[0.0]], atoms=[JumpAtom([-0.5], 0.1)])
)
J2 = validate_spec(
    LevyMarketSpec(d=1, m=1, a=[0.05], c=[[0.01]], atoms=[JumpAtom([0.25], 0.2)])
)
G_BS1 = maximize_growth(BS1)
G_J1 = maximize_growth(J1)
G_J2 = maximize_growth(J2)

ITO1 = validate_spec(
    ItoMarketSpec(
        d=1, m=1, coefficient_model=ConstantCoefficients(a=[0.08], sigma=[[0.2]])
    )
)


class TestStreams:
    def test_streams_are_reproducible(self):
        a = replication_stream(5, 17).standard_normal(8)
        b = replication_stream(5, 17).standard_normal(8)
        assert np.array_equal(a, b)

    def test_streams_differ_across_reps_and_substreams(self):
        a = replication_stream(5, 17).standard_normal(8)
        b = replication_stream(5, 18).standard_normal(8)
        c = replication_stream(5, 17, substream=1).standard_normal(8)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)


class TestLevyPaths:
    def test_path_record_invariants(self):
        path = simulate_levy_log_wealth(
            J2, G_J2.rho, 1.0, 20.0, G_J2, scheme="event", master_seed=3, rep=0
        )
        assert path.status == "reached"
        assert np.all(np.diff(path.t) > 0)
        assert np.all(np.diff(path.market_time) >= 0)
        assert path.market_time[0] == 0.0

    def test_market_time_runs_at_gstar(self):
        path = simulate_levy_log_wealth(
            J2, G_J2.rho, 1.0, 20.0, G_J2, scheme="event", master_seed=3, rep=1
        )
        assert np.allclose(path.market_time, G_J2.g_star * path.t, rtol=1e-12)

    def test_j1_pure_jump_slope_and_jump_marks(self):
        # between jumps log wealth climbs at exactly b = 0.2; each jump
        # multiplies wealth by 1/3
        path = simulate_levy_log_wealth(
            J1, G_J1.rho, 1.0, math.e ** 2, G_J1, scheme="event", master_seed=4, rep=2
        )
        dlog = np.diff(path.log_wealth)
        dt = np.diff(path.t)
        jumps = path.is_jump[1:]
        assert np.allclose(dlog[~jumps], 0.2 * dt[~jumps], atol=1e-10)
        if np.any(jumps):
            total = 0.2 * dt[jumps] + math.log(1.0 / 3.0)
            assert np.allclose(dlog[jumps], total, atol=1e-10)

    def test_same_seed_same_path(self):
        kw = dict(scheme="event", master_seed=9, rep=5)
        p1 = simulate_levy_log_wealth(J2, G_J2.rho, 1.0, 50.0, G_J2, **kw)
        p2 = simulate_levy_log_wealth(J2, G_J2.rho, 1.0, 50.0, G_J2, **kw)
        assert np.array_equal(p1.t, p2.t)
        assert np.array_equal(p1.log_wealth, p2.log_wealth)
        assert p1.tau == p2.tau and p1.market_T == p2.market_T

    def test_grid_path_deterministic_too(self):
        kw = dict(scheme="grid", dt=1e-2, master_seed=9, rep=5)
        p1 = simulate_levy_log_wealth(BS1, G_BS1.rho, 1.0, 2.0, G_BS1, **kw)
        p2 = simulate_levy_log_wealth(BS1, G_BS1.rho, 1.0, 2.0, G_BS1, **kw)
        assert np.array_equal(p1.log_wealth, p2.log_wealth)

    def test_long_horizon_drift_matches_growth_rate(self):
        # law of large numbers on log wealth for pi = 2 in BS1: the total
        # log return over the total elapsed time converges to g(2) = 0.08
        reps = 400
        h = 25.0
        taus = np.empty(reps)
        for r in range(reps):
            path = simulate_levy_log_wealth(
                BS1, np.array([2.0]), 1.0, math.exp(h), G_BS1, scheme="event",
                master_seed=77, rep=r,
            )
            assert path.status == "reached"
            taus[r] = path.tau
        rate = reps * h / taus.sum()
        # delta-method error bar for h / mean(tau)
        stderr = rate * taus.std(ddof=1) / math.sqrt(reps) / taus.mean()
        assert abs(rate - 0.08) <= 3 * stderr

    def test_infeasible_portfolio_rejected(self):
        with pytest.raises(ValueError):
            simulate_levy_log_wealth(J1, np.array([3.0]), 1.0, 2.0, G_J1)

    def test_budget_exhaustion_reported(self):
        path = simulate_levy_log_wealth(
            BS1, G_BS1.rho, 1.0, 1e9, G_BS1, scheme="event",
            master_seed=1, rep=0, market_time_budget=0.05,
        )
        assert path.status == "budget"
        assert math.isnan(path.market_T)


class TestFirstUpcrossing:
    def test_detects_first_event_at_or_above_level(self):
        path = simulate_levy_log_wealth(
            J2, G_J2.rho, 1.0, 100.0, G_J2, scheme="event", master_seed=12, rep=0
        )
        up = first_upcrossing(path, 20.0)
        assert up is not None
        i = int(np.argmax(path.log_wealth >= math.log(20.0) - 1e-12))
        assert up.tau == path.t[i]
        assert up.overshoot >= 0.0

    def test_none_when_never_reached(self):
        path = simulate_levy_log_wealth(
            BS1, G_BS1.rho, 1.0, 2.0, G_BS1, scheme="event", master_seed=12, rep=0
        )
        assert first_upcrossing(path, 1e12) is None

    def test_level_at_start_is_time_zero(self):
        path = simulate_levy_log_wealth(
            BS1, G_BS1.rho, 1.0, 2.0, G_BS1, scheme="event", master_seed=12, rep=1
        )
        up = first_upcrossing(path, 1.0)
        assert up.T == 0.0 and up.tau == 0.0


class TestInverseGaussianOracle:
    def test_moments(self):
        rng = np.random.default_rng(100)
        b = 3.0
        s = ig_first_passage_oracle(b, 300_000, rng)
        # mean b, variance 2b for the unit-growth market-time clock
        assert s.mean() == pytest.approx(b, abs=3 * s.std() / math.sqrt(s.size))
        assert s.var() == pytest.approx(2 * b, rel=0.02)
        assert np.all(s > 0)


class TestExperiments:
    def test_continuous_market_mean_is_log_level(self):
        rep = upcrossing_experiment(
            BS1, "numeraire", 1.0, math.e, 20_000, scheme="event", master_seed=21,
            growth=G_BS1,
        )
        assert rep.reached_fraction == 1.0
        assert abs(rep.mean_T - 1.0) <= 3 * rep.stderr_T

    def test_event_and_grid_schemes_agree(self):
        r_event = upcrossing_experiment(
            J2, "numeraire", 1.0, math.e, 6000, scheme="event", master_seed=22,
            growth=G_J2,
        )
        r_grid = upcrossing_experiment(
            J2, "numeraire", 1.0, math.e, 6000, scheme="grid", dt=2e-3,
            master_seed=22, growth=G_J2,
        )
        joint = math.hypot(r_event.stderr_T, r_grid.stderr_T)
        slack = 3 * joint + 2 * 2e-3 * G_J2.g_star
        assert abs(r_event.mean_T - r_grid.mean_T) <= slack

    def test_thread_count_does_not_change_results(self):
        kw = dict(scheme="event", master_seed=23, growth=G_J2)
        r1 = upcrossing_experiment(J2, "numeraire", 1.0, 30.0, 5000, n_workers=1, **kw)
        r4 = upcrossing_experiment(J2, "numeraire", 1.0, 30.0, 5000, n_workers=4, **kw)
        assert np.array_equal(r1.T, r4.T)
        assert np.array_equal(r1.tau, r4.tau)
        assert r1.mean_T == r4.mean_T

    def test_scale_invariance_under_joint_wealth_scaling(self):
        # (x, level) -> (u x, u level) with u a power of two leaves the
        # sampled gap process bitwise unchanged
        r1 = upcrossing_experiment(
            J2, "numeraire", 1.0, 8.0, 2000, scheme="event", master_seed=24,
            growth=G_J2,
        )
        r2 = upcrossing_experiment(
            J2, "numeraire", 4.0, 32.0, 2000, scheme="event", master_seed=24,
            growth=G_J2,
        )
        assert np.array_equal(r1.T, r2.T)
        assert np.array_equal(r1.overshoot, r2.overshoot)

    def test_overshoot_nonnegative_and_bounded_for_levy(self):
        rep = upcrossing_experiment(
            J2, "numeraire", 1.0, 50.0, 5000, scheme="event", master_seed=25,
            growth=G_J2,
        )
        assert np.all(rep.overshoot_samples >= 0.0)
        assert np.all(rep.overshoot_samples <= math.log1p(G_J2.alpha) + 1e-9)

    def test_budget_truncation_excluded_from_mean(self):
        rep = upcrossing_experiment(
            BS1, "numeraire", 1.0, math.e ** 5, 50, scheme="event",
            master_seed=26, growth=G_BS1, market_time_budget=0.5,
        )
        assert rep.reached_fraction < 1.0
        assert np.all(np.isnan(rep.T[~rep.reached]))

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            upcrossing_experiment(BS1, "numeraire", 1.0, 2.0, 0)
        with pytest.raises(ValueError):
            upcrossing_experiment(BS1, "numeraire", -1.0, 2.0, 10)
        with pytest.raises(ValueError):
            upcrossing_experiment(
                BS1, "numeraire", 1.0, 2.0, 10, scheme="nope", growth=G_BS1
            )


class TestItoPaths:
    def test_market_time_is_half_lambda_sq_t(self):
        path = simulate_ito_log_wealth(ITO1, "numeraire", 1.0, 2.0, dt=1e-3,
                                       master_seed=31, rep=0)
        # constant coefficients: O_t = 0.5 * 0.16 * t exactly
        assert np.allclose(path.market_time, 0.08 * path.t, rtol=1e-10)

    def test_constant_market_mean_matches_log_level(self):
        rep = upcrossing_experiment(
            ITO1, "numeraire", 1.0, math.e, 4000, dt=1e-3, master_seed=32
        )
        assert abs(rep.mean_T - 1.0) <= max(3 * rep.stderr_T, 0.015)

    def test_schedule_change_shows_in_drift(self):
        model = PiecewiseCoefficients(
            times=[0.0, 1.0], a_values=[[0.08], [0.32]],
            sigma_values=[[[0.2]], [[0.2]]],
        )
        spec = validate_spec(ItoMarketSpec(d=1, m=1, coefficient_model=model))
        path = simulate_ito_log_wealth(spec, "numeraire", 1.0, 1e6, dt=1e-2,
                                       master_seed=33, rep=0,
                                       market_time_budget=1.0)
        # lambda^2 jumps from 0.16 to 2.56 at t=1, so market time accelerates
        dO = np.diff(path.market_time)
        early = dO[path.t[1:] <= 0.99]
        late = dO[path.t[1:] > 1.01]
        assert late.mean() > 10 * early.mean()

    def test_stochastic_vol_runs_and_reaches(self):
        model = MeanRevertingVolatility(a=[0.08], sigma=[[0.2]], kappa=2.0,
                                        theta=0.0, xi=0.3, y0=0.0)
        spec = validate_spec(ItoMarketSpec(d=1, m=1, coefficient_model=model))
        rep = upcrossing_experiment(
            spec, "numeraire", 1.0, math.e, 1000, dt=1e-3, master_seed=34
        )
        assert rep.reached_fraction == 1.0
        assert abs(rep.mean_T - 1.0) <= max(3 * rep.stderr_T, 0.02)

    def test_constant_pi_strategy_slower_than_numeraire(self):
        kw = dict(x=1.0, level=math.e, dt=1e-3, master_seed=35)
        r_num = upcrossing_experiment(ITO1, "numeraire", reps=3000, **kw)
        r_half = upcrossing_experiment(ITO1, np.array([1.0]), reps=3000, **kw)
        joint = math.hypot(r_num.stderr_T, r_half.stderr_T)
        assert r_num.mean_T <= r_half.mean_T + 3 * joint
