from __future__ import annotations

import numpy as np
import pytest

from walkops import env as envs
from walkops import sampling
from walkops.analytics import SpectralParams, first_return_survival, g_H
from walkops.streams import generator

P = SpectralParams()


def test_first_return_times_follow_the_exact_law():
    tau = sampling.sample_first_return_times(generator(1, 0), (100_000,))
    assert np.all(tau >= 2)
    assert np.all(tau % 2 == 0)
    assert np.mean(tau == 2) == pytest.approx(0.5, abs=0.01)
    assert np.mean(tau == 4) == pytest.approx(0.125, abs=0.01)


def test_first_return_tail_beyond_the_table(monkeypatch):
    monkeypatch.setattr(sampling, "SURVIVAL_TABLE_SIZE", 8)
    tau = sampling.sample_first_return_times(generator(2, 0), (100_000,))
    assert np.all(tau % 2 == 0)
    for wait, k in ((16, 7), (20, 9)):
        tail = float(first_return_survival(k))
        assert np.mean(tau >= wait) == pytest.approx(tail, abs=0.01)


def test_halfplane_occupation_at_first_return():
    sample = sampling.run_until_returns(
        envs.halfplane(), 1, generator(3, 0), 2_000, P, cap=100_000, with_waits=False
    )
    assert sample.censored_fraction < 0.02
    sigma = sample.sigma[~sample.censored]
    delta = sample.delta[~sample.censored]
    assert np.all(sigma % 2 == 0)
    # up excursions sit right of the axis, down ones left after one step at 0
    assert np.all((delta == sigma) | (delta == 2 - sigma))
    assert np.all(sample.sigma[sample.censored] == -1)


def test_alternate_occupation_at_returns_is_balanced():
    sample = sampling.run_until_returns(
        envs.alternate(), 3, generator(4, 0), 500, P, cap=100_000
    )
    assert np.all(sample.delta[~sample.censored] == 0)


def test_excursion_sampler_matches_lattice_walk_on_the_alternate_lattice():
    exact_x, sigma = sampling.alternate_return_positions(generator(5, 0), P, 1, 20_000)
    walked = sampling.run_until_returns(
        envs.alternate(), 1, generator(5, 1), 20_000, P, cap=100_000
    )
    assert np.all(sigma % 2 == 0)
    a = np.mean(exact_x == 0)
    b = np.mean(walked.x[~walked.censored] == 0)
    assert a == pytest.approx(b, abs=0.02)


def test_halfplane_excursion_sampler_moves():
    x, sigma = sampling.halfplane_return_positions(generator(6, 0), P, 2, 1_000)
    assert x.shape == sigma.shape == (1_000,)
    assert np.all(sigma >= 4)


def test_excursion_sampler_matches_lattice_walk_on_the_halfplane():
    theta = 1.0
    fast = sampling.return_positions(
        envs.halfplane(), 1, generator(9, 0), 20_000, P, cap=100_000
    )
    walked = sampling.run_until_returns(
        envs.halfplane(), 1, generator(9, 1), 20_000, P, cap=100_000
    )
    exact = complex(g_H(P, theta))
    for sample in (fast, walked):
        kept = ~sample.censored
        phase = np.exp(1j * theta * sample.x[kept])
        assert phase.real.mean() == pytest.approx(exact.real, abs=0.02)
        assert phase.imag.mean() == pytest.approx(exact.imag, abs=0.02)
        sigma = sample.sigma[kept]
        delta = sample.delta[kept]
        assert np.all((delta == sigma) | (delta == 2 - sigma))


@pytest.mark.parametrize("env", [envs.alternate(), envs.halfplane()])
def test_excursion_samplers_censor_at_the_step_cap(env):
    sample = sampling.return_positions(env, 1, generator(10, 0), 20_000, P, cap=4)
    # P(sigma_1 > 4) = C(4, 2) / 4^2
    assert sample.censored_fraction == pytest.approx(6 / 16, abs=0.02)
    assert np.all(sample.sigma[sample.censored] == -1)
    assert np.all(sample.sigma[~sample.censored] <= 4)


def test_identity_right_hand_side_parity():
    value, sigma = sampling.halfplane_identity_rhs(generator(7, 0), 1, 1_000)
    assert np.all(value % 2 == 0)
    assert np.all(np.abs(value - 1) == sigma - 1)


def test_embedded_walk_on_the_alternate_lattice():
    grid = [1, 2, 3, 10, 11]
    sample = sampling.embedded_walk(
        [envs.alternate()] * 50, grid, generator(8, 0), P
    )
    assert sample.delta.shape == (50, 5)
    assert np.all(sample.delta == np.array(grid) % 2)


def test_embedded_walk_halfplane_parity():
    grid = [5, 50, 500]
    sample = sampling.embedded_walk([envs.halfplane()] * 20, grid, generator(9, 0), P)
    assert np.all((sample.delta - np.array(grid)) % 2 == 0)
    assert np.all(np.abs(sample.delta) <= np.array(grid))


def test_embedded_walk_needs_positive_grid():
    with pytest.raises(ValueError, match="DOMAIN"):
        sampling.embedded_walk([envs.alternate()], [0, 5], generator(1, 0), P)


def test_skeleton_path():
    path = sampling.skeleton_path(generator(10, 0), 100)
    assert path.shape == (101,)
    assert path[0] == 0
    assert np.all(np.abs(np.diff(path)) == 1)
