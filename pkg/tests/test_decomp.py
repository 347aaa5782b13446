from __future__ import annotations

import numpy as np
import pytest

from walkops import env as envs
from walkops import walk
from walkops.decomp import (
    Decomposition,
    alternating_occupation_sum,
    decompose,
    embedded_positions,
    epoch_indicators,
    extract_increments,
    reconstruct,
    skeleton_view,
    straddle_return_count,
)
from walkops.walk import Move, Trajectory


def test_worked_decomposition(worked_env, worked_moves):
    traj = Trajectory.from_moves(worked_moves, worked_env)
    dec = decompose(extract_increments(traj))
    assert dec.psi.tolist() == [1, -1, -1, -1, 1, 1]
    assert dec.xi_tilde.tolist() == [0, 2, 0, 0, 4, 3]
    assert dec.alpha == 0
    assert dec.tail == 0
    assert dec.total_length == 15


def test_worked_skeleton_view(worked_env, worked_moves):
    traj = Trajectory.from_moves(worked_moves, worked_env)
    view = skeleton_view(decompose(extract_increments(traj)), worked_env)
    assert view.Y.tolist() == [0, 1, 0, -1, -2, -1, 0]
    assert view.T.tolist() == [0, 1, 4, 5, 6, 11, 15]
    assert view.X.tolist() == [0, 0, 2, 2, 2, -2, 1]
    assert view.Delta.tolist() == [0, -1, 0, -1, 0, -1, 0]
    assert view.sigma.tolist() == [0, 2, 6]
    assert [int(view.X[s]) for s in view.sigma[1:]] == [2, 1]
    # the embedded walk is the lattice walk read at the skeleton times
    assert traj.xs[view.T].tolist() == view.X.tolist()
    assert traj.ys[view.T].tolist() == view.Y.tolist()


def test_occupation_queries(worked_env, worked_moves):
    traj = Trajectory.from_moves(worked_moves, worked_env)
    view = skeleton_view(decompose(extract_increments(traj)), worked_env)
    assert view.eta(5, 0) == 2
    assert view.occupation(6) == {-2: 1, -1: 2, 0: 3, 1: 1}
    right, left = view.sign_counts(6)
    assert (right, left) == (3, 3)
    assert right - left == view.Delta[6]
    with pytest.raises(LookupError, match="NOT_AVAILABLE"):
        view.eta(7, 0)


def test_leading_horizontal_run():
    dec = decompose([0, 0, 1])
    assert dec.psi.tolist() == [1]
    assert dec.xi_tilde.tolist() == [2]
    assert dec.alpha == 1
    assert dec.tail == 0


def test_horizontal_only_and_empty():
    dec = decompose([0, 0, 0])
    assert dec.vertical_moves == 0
    assert (dec.alpha, dec.tail) == (1, 3)
    assert reconstruct(dec).psi_tilde.tolist() == [0, 0, 0]
    empty = decompose([])
    assert (empty.alpha, empty.tail, empty.total_length) == (0, 0, 0)


def test_trailing_run_is_kept():
    dec = decompose([1, 0, 0])
    assert dec.xi_tilde.tolist() == [0]
    assert dec.tail == 2
    assert reconstruct(dec).psi_tilde.tolist() == [1, 0, 0]


def test_round_trip_on_random_increments():
    rng = np.random.default_rng(12)
    for _ in range(50):
        length = int(rng.integers(0, 200))
        values = rng.choice([-1, 0, 0, 1], size=length).astype(np.int8)
        assert np.array_equal(reconstruct(decompose(values)).psi_tilde, values)


def test_horizontal_only_walk_never_moves_the_embedded_walk():
    traj = Trajectory.from_moves([Move.HORIZONTAL] * 5, envs.alternate())
    dec = decompose(extract_increments(traj))
    assert embedded_positions(dec, envs.alternate()).tolist() == [0]


@pytest.mark.parametrize(
    "dec",
    [
        Decomposition(np.array([1], np.int8), np.array([], np.int64), 0, 0),
        Decomposition(np.array([0], np.int8), np.array([0], np.int64), 0, 0),
        Decomposition(np.array([1], np.int8), np.array([-1], np.int64), 0, 0),
        Decomposition(np.array([1], np.int8), np.array([2], np.int64), 0, 0),
        Decomposition(np.array([1], np.int8), np.array([0], np.int64), 2, 0),
    ],
)
def test_malformed_decompositions(dec):
    with pytest.raises(ValueError, match="MALFORMED_DECOMPOSITION"):
        reconstruct(dec)


def test_increments_outside_unit_range():
    with pytest.raises(ValueError, match="MALFORMED_DECOMPOSITION"):
        decompose([0, 2])


def test_alternating_occupation_vanishes_at_returns():
    env = envs.alternate()
    rng = np.random.default_rng(4)
    steps = 2 * rng.integers(0, 2, size=2_000) - 1
    view = skeleton_view(decompose(steps), env)
    for n in range(view.sigma.shape[0]):
        assert alternating_occupation_sum(view, n) == 0
        assert view.Delta[view.sigma[n]] == 0
    with pytest.raises(LookupError, match="NOT_AVAILABLE"):
        alternating_occupation_sum(view, view.sigma.shape[0])


def test_up_down_straddles_once():
    traj = Trajectory.from_moves([Move.UP, Move.DOWN], envs.alternate())
    assert straddle_return_count(traj, envs.alternate()) == (1, 1)


def test_worked_walk_has_no_straddle(worked_env, worked_moves):
    traj = Trajectory.from_moves(worked_moves, worked_env)
    assert straddle_return_count(traj, worked_env) == (0, 0)


@pytest.mark.parametrize(
    "env", [envs.alternate(), envs.halfplane(), envs.random_iid(2)]
)
def test_returns_are_straddling_epochs(env):
    for stream in range(10):
        traj = walk.simulate(env, 4_000, seed=8, stream=stream)
        counts, straddles = epoch_indicators(traj, env)
        assert np.array_equal(counts, straddles.astype(np.int64))
        assert counts.sum() == walk.origin_visits(traj) - 1
