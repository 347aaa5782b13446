from __future__ import annotations

import math

import numpy as np
import pytest

from walkops import analytics, estimators
from walkops import env as envs
from walkops.analytics import SpectralParams
from walkops.config import RunSettings


def test_default_moments():
    m = estimators.default_moments(SpectralParams())
    assert (m.m1, m.s2) == pytest.approx((0.5, 0.75))
    other = estimators.default_moments(SpectralParams(p=1 / 3))
    assert (other.m1, other.s2) == pytest.approx((2.0, 6.0))


def test_trial_blocks_cover_trials_in_order():
    blocks = estimators.trial_blocks(10, 4)
    assert blocks == [(0, 0, 4), (1, 4, 4), (2, 8, 2)]


def test_trial_environments_are_contiguous_groups():
    members = estimators.trial_environments(envs.random_iid(3), 6, 2)
    assert members[0] is members[2]
    assert members[3] is members[5]
    assert members[0] != members[3]


def test_power_law_fit_is_exact_on_clean_data():
    ns = [10, 30, 100, 300, 1000]
    fit = estimators.fit_power_law(ns, [2.0 * n**0.25 for n in ns])
    assert fit.exponent == pytest.approx(0.25)
    assert math.exp(fit.intercept) == pytest.approx(2.0)
    assert fit.r_squared == pytest.approx(1.0)


def test_log_growth_fit():
    ns = [10, 100, 1000]
    fit = estimators.fit_log_growth(ns, [1.0 + 0.5 * math.log(n) for n in ns])
    assert fit.exponent == pytest.approx(0.5)


@pytest.mark.parametrize(
    "ns",
    [[10, 20, 30, 40], [100, 200, 300, 400, 1000]],
)
def test_grid_refusals(ns):
    with pytest.raises(ValueError, match="INSUFFICIENT_DATA"):
        estimators.fit_power_law(ns, [1.0] * len(ns))


def test_delta_scaling_refuses_a_short_grid_before_simulating(monkeypatch):
    monkeypatch.setattr(
        estimators, "embedded_walk", lambda *a, **k: pytest.fail("simulated")
    )
    with pytest.raises(ValueError, match="INSUFFICIENT_DATA"):
        estimators.delta_scaling(envs.random_iid(1), [10, 100], 10, seed=1)


def test_delta_scaling_is_thread_count_independent():
    grid = [10, 30, 100, 300, 1000]
    env = envs.random_iid(5)
    one = estimators.delta_scaling(
        env, grid, 16, seed=3, settings=RunSettings(threads=1, block_size=4)
    )
    many = estimators.delta_scaling(
        env, grid, 16, seed=3, settings=RunSettings(threads=4, block_size=4)
    )
    assert one.rows == many.rows
    assert len(one.rows) == len(grid) + 1


def test_speed_estimate_centering():
    est = estimators.speed_estimate(
        envs.random_iid(2), 1_000, 2_000, seed=4, environments=2_000
    )
    assert abs(est.centered_mean) < 4 * est.centered_mean_stderr + 1e-9
    assert est.variance_ratio == pytest.approx(1.0, abs=0.15)
    assert len(est.rows()) == 4


def test_fluctuation_report_on_a_known_path():
    path = np.array([0, 1, 0, 1, 0])
    report = estimators.fluctuation_report(envs.alternate(), path, (0.25, 0.25, 0.3))
    assert report.n == 2
    assert report.max_abs_Y == 1
    assert report.max_eta == 2
    assert report.abs_Delta == 0
    # eta reaches 2 > 2^0.75
    assert report.a1 and not report.a2 and not report.b


def test_fluctuation_diagnostics_summary():
    summary = estimators.fluctuation_diagnostics(
        envs.random_iid(1), 100, 50, (0.25, 0.25, 0.3), seed=2
    )
    assert len(summary.reports) == 50
    for f in (summary.freq_not_a1, summary.freq_not_a2, summary.freq_b):
        assert 0.0 <= f <= 1.0
    assert summary.bound_not_a1 == pytest.approx(min(1.0, 2 * math.exp(-(100**0.5))))
    quantities = [r.quantity for r in summary.rows()]
    assert quantities == ["not-A1", "not-A2", "B", "not-A1-bound"]
    with pytest.raises(ValueError, match="DOMAIN"):
        estimators.fluctuation_diagnostics(
            envs.alternate(), 10, 5, (0.0, 0.2, 0.2), seed=1
        )


def test_h_identity_small_sample():
    result = estimators.h_identity_test(
        1, 2_000, seed=5, settings=RunSettings(step_cap=10**5), n_resamples=199
    )
    assert result.statistic < 0.07
    assert result.passed
    assert result.censored_fraction < 0.02
    assert [r.quantity for r in result.rows()][0] == "h-identity-ks"


def test_visit_census_rows():
    census = estimators.visit_census(envs.halfplane(), [100, 1_000], 8, seed=6)
    assert census.budgets == (100, 1_000)
    assert census.means[0] <= census.means[1]
    assert [r.quantity for r in census.rows()] == ["visits", "visits"]
    per_env = estimators.visit_census(
        envs.random_iid(2), [100, 1_000], 4, seed=6, environments=2
    )
    names = [r.quantity for r in per_env.rows()]
    assert names.count("visits-env0") == 2
    assert names.count("visits-env1") == 2


def test_visit_census_is_thread_count_independent():
    one = estimators.visit_census(envs.alternate(), [500], 6, seed=1)
    settings = RunSettings(threads=3, block_size=2)
    many = estimators.visit_census(
        envs.alternate(), [500], 6, seed=1, settings=settings
    )
    assert one == many


def test_zero_return_frequency_matches_the_integral():
    row = estimators.zero_return_frequency(envs.alternate(), 1, 50_000, seed=7)
    exact = analytics.return_prob_L(SpectralParams(), 1).value
    assert abs(row.estimate - exact) < 4 * row.stderr


def test_characteristic_mc_alternate():
    mean, re_err, im_err, censored = estimators.characteristic_mc(
        envs.alternate(), 0.5, 1, 20_000, seed=8
    )
    exact = float(analytics.char_L(SpectralParams(), 0.5, 1))
    assert abs(mean.real - exact) < 4 * re_err
    assert abs(mean.imag) < 4 * im_err
    assert censored == 0.0


def test_characteristic_mc_halfplane():
    mean, re_err, im_err, _ = estimators.characteristic_mc(
        envs.halfplane(), 0.5, 2, 20_000, seed=9
    )
    exact = complex(analytics.g_H(SpectralParams(), 0.5)) ** 2
    assert abs(mean.real - exact.real) < 4 * re_err
    assert abs(mean.imag - exact.imag) < 4 * im_err


def test_delta_at_returns_alternate():
    row = estimators.delta_at_returns(envs.alternate(), 3, 200, seed=1)
    assert row.estimate == 0.0


def test_run_length_and_move_laws():
    gof = estimators.waiting_time_gof(60_000, seed=10)
    assert gof.pvalue > 1e-4
    assert abs(gof.mean - 0.5) < 5 * gof.mean_stderr
    moves = estimators.move_frequency_test(60_000, seed=10)
    assert moves.pvalue > 1e-4


def test_zero_return_frequency_reports_the_step_cap():
    settings = RunSettings(step_cap=4)
    for env in (envs.alternate(), envs.halfplane(), envs.random_iid(3)):
        row = estimators.zero_return_frequency(env, 1, 4_000, seed=2, settings=settings)
        assert row.censored_fraction == pytest.approx(6 / 16, abs=0.04)
