from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import stats

from walkops import analytics
from walkops.analytics import SpectralParams
from walkops.quadrature import QuadratureSpec

P = SpectralParams()
SLOPE = 2.0 / (math.pi * math.sqrt(3.0))


def test_params_range():
    with pytest.raises(ValueError, match="DOMAIN"):
        SpectralParams(p=1.0)
    assert P.q == pytest.approx(1 / 3)
    assert P.mean_wait == pytest.approx(0.5)


def test_first_return_gf_matches_its_series():
    k = np.arange(1, 200)
    series = float(np.sum(analytics.first_return_pmf(k) * 0.6 ** (2 * k)))
    assert float(analytics.first_return_gf(0.6)) == pytest.approx(0.2)
    assert series == pytest.approx(0.2, rel=1e-10)
    assert float(analytics.first_return_gf(1.0)) == pytest.approx(1.0)


@pytest.mark.parametrize("s", [2.0, -1.5, [0.5, 1.01]])
def test_first_return_gf_rejects_arguments_outside_the_unit_interval(s):
    with pytest.raises(ValueError, match="DOMAIN"):
        analytics.first_return_gf(s)


def test_closed_forms():
    thetas = np.linspace(-math.pi, math.pi, 41)
    c = analytics.chi(P, thetas)
    assert np.allclose(np.abs(c), analytics.modulus_r(P, thetas))
    assert np.allclose(np.angle(c), analytics.angle_alpha(P, thetas))
    assert float(analytics.modulus_r(P, math.pi)) == pytest.approx(0.5)
    assert complex(analytics.chi(P, 0.0)) == pytest.approx(1.0)


def test_first_return_law():
    assert analytics.first_return_survival([0, 1, 2]).tolist() == pytest.approx(
        [1.0, 0.5, 0.375]
    )
    assert analytics.first_return_pmf([1, 2]).tolist() == pytest.approx([0.5, 0.125])
    with pytest.raises(ValueError, match="DOMAIN"):
        analytics.first_return_pmf(0)


def test_char_l():
    assert float(analytics.char_L(P, 0.0, 7)) == pytest.approx(1.0)
    r = float(analytics.modulus_r(P, 1.0))
    assert float(analytics.char_L(P, 1.0, 3)) == pytest.approx(
        (1 - math.sqrt(1 - r * r)) ** 3
    )


def test_g_h_basic_properties():
    assert complex(analytics.g_H(P, 0.0)) == pytest.approx(1.0)
    thetas = np.linspace(0.01, math.pi, 50)
    g = analytics.g_H(P, thetas)
    assert np.all(np.abs(g) <= 1.0 + 1e-12)
    assert np.allclose(analytics.g_H(P, -thetas), np.conj(g))


def test_printed_form_carries_an_extra_modulus():
    thetas = np.linspace(0.05, math.pi, 20)
    expected = analytics.modulus_r(P, thetas) * analytics.g_H(P, thetas)
    assert np.allclose(analytics.g_H_printed(P, thetas), expected)


def test_g_limit():
    rows, limit = analytics.g_limit_table(P, [1e-4, 1e-6, 1e-8])
    assert limit == pytest.approx(1 / math.sqrt(2), abs=1e-3)
    assert rows[-1][1] == pytest.approx(1 / math.sqrt(2), abs=1e-3)
    with pytest.raises(ValueError, match="DOMAIN"):
        analytics.g_limit_ratio(P, 0.0)


def test_conditional_zero_small_counts():
    first = analytics.conditional_zero_prob(P, 1, 0).value
    second = analytics.conditional_zero_prob(P, 1, 1).value
    assert first == pytest.approx(2 / 3, rel=1e-7)
    assert second == pytest.approx(0.5, rel=1e-7)
    with pytest.raises(ValueError, match="DOMAIN"):
        analytics.conditional_zero_prob(P, 0, 0)


def test_conditional_zero_matches_negative_binomial_sum():
    j = np.arange(0, 400)
    expected = float(np.sum(stats.nbinom.pmf(j, 5, P.p) ** 2))
    got = analytics.conditional_zero_prob(P, 5, 5).value
    assert got == pytest.approx(expected, rel=1e-7)


def test_return_prob_l_first_return_by_series():
    # mix X = NB(k) - NB'(k) over the first return time 2k
    ks = np.arange(1, 1501)
    j = np.arange(0, 3000)
    zero = np.array([np.sum(stats.nbinom.pmf(j, k, P.p) ** 2) for k in ks])
    series = float(np.sum(analytics.first_return_pmf(ks) * zero))
    assert analytics.return_prob_L(P, 1).value == pytest.approx(series, abs=5e-4)


def test_return_prob_l_decays_like_one_over_n():
    scaled = 1000 * analytics.return_prob_L(P, 1000).value
    assert scaled == pytest.approx(SLOPE, rel=0.02)


def test_green_sum_l_is_the_partial_sum():
    partial = sum(analytics.return_prob_L(P, n).value for n in range(1, 6))
    assert analytics.green_sum_L(P, 5).value == pytest.approx(partial, rel=1e-7)


def test_green_cutoff_grows_logarithmically():
    coarse = analytics.green_cutoff_L(P, 1e-2).value
    fine = analytics.green_cutoff_L(P, 1e-4).value
    assert fine - coarse == pytest.approx(SLOPE * math.log(100), rel=1e-3)


def test_green_sum_h_converges():
    coarse = analytics.green_sum_H(P, 1e-6).value
    fine = analytics.green_sum_H(P, 1e-8).value
    assert fine > 1.0
    assert abs(fine - coarse) < 0.01 * fine


def test_tolerance_stability():
    loose = analytics.return_prob_L(P, 10, QuadratureSpec(rel_tol=1e-8)).value
    tight = analytics.return_prob_L(P, 10, QuadratureSpec(rel_tol=1e-10)).value
    assert loose == pytest.approx(tight, rel=1e-7)


def test_domain_errors():
    with pytest.raises(ValueError, match="DOMAIN"):
        analytics.return_prob_L(P, 0)
    with pytest.raises(ValueError, match="DOMAIN"):
        analytics.green_sum_H(P, 0.0)
    with pytest.raises(ValueError, match="DOMAIN"):
        analytics.green_cutoff_L(P, 4.0)
