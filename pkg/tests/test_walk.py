from __future__ import annotations

import numpy as np
import pytest

from walkops import env as envs
from walkops import walk
from walkops.walk import LatticeState, Move, Trajectory


def test_step_follows_the_line_orientation():
    env = envs.alternate()
    start = LatticeState(0, 0)
    assert walk.step(start, env, Move.UP) == LatticeState(0, 1)
    assert walk.step(start, env, Move.DOWN) == LatticeState(0, -1)
    assert walk.step(start, env, Move.HORIZONTAL) == LatticeState(1, 0)
    assert walk.step(LatticeState(0, 1), env, 3) == LatticeState(-1, 1)


def test_lattice_state_range():
    with pytest.raises(OverflowError, match="ORDINATE_RANGE"):
        LatticeState(0, 2**62)


def test_worked_trajectory_positions(worked_env, worked_moves):
    traj = Trajectory.from_moves(worked_moves, worked_env)
    assert len(traj) == 15
    assert traj.start == LatticeState(0, 0)
    assert traj.position(3) == LatticeState(2, 1)
    assert traj.position(10) == LatticeState(-2, -2)
    assert traj.position(15) == LatticeState(1, 0)


def test_vectorized_walk_matches_step_by_step():
    env = envs.random_iid(4)
    traj = walk.simulate(env, 2_000, seed=99)
    state = LatticeState()
    for k, tag in enumerate(traj.moves):
        state = walk.step(state, env, int(tag))
        assert traj.position(k + 1) == state
    assert traj.states()[-1] == state


def test_simulation_is_reproducible():
    env = envs.halfplane()
    a = walk.simulate(env, 5_000, seed=1)
    b = walk.simulate(env, 5_000, seed=1)
    c = walk.simulate(env, 5_000, seed=1, stream=1)
    assert np.array_equal(a.moves, b.moves)
    assert not np.array_equal(a.moves, c.moves)


def test_moves_are_uniform_over_three_tags():
    traj = walk.simulate(envs.alternate(), 30_000, seed=5)
    counts = np.bincount(traj.moves, minlength=4)[1:]
    assert counts.sum() == 30_000
    # 6 standard errors of a multinomial share
    assert np.all(np.abs(counts / 30_000 - 1 / 3) < 6 * np.sqrt(2 / 9 / 30_000))


def test_record_cap():
    with pytest.raises(ValueError, match="record cap"):
        walk.simulate(envs.alternate(), 101, seed=0, record_cap=100)


def test_bad_move_tags():
    with pytest.raises(ValueError, match="DOMAIN"):
        Trajectory.from_moves([1, 4], envs.alternate())


def test_origin_visits_count_the_start():
    env = envs.alternate()
    assert walk.origin_visits(Trajectory.from_moves([], env)) == 1
    empty = walk.simulate(env, 0, seed=5)
    assert empty.states() == [LatticeState(0, 0)]
    assert walk.origin_visits(empty) == 1
    up_down = Trajectory.from_moves([Move.UP, Move.DOWN], env)
    assert walk.origin_visits(up_down) == 2


def test_worked_walk_visits_origin_once(worked_env, worked_moves):
    traj = Trajectory.from_moves(worked_moves, worked_env)
    assert walk.origin_visits(traj) == 1


def test_streaming_census_agrees_with_recorded_walk():
    env = envs.alternate()
    budget = 50_000
    traj = walk.simulate(env, budget, seed=3, stream=2)
    at_origin = np.flatnonzero((traj.xs == 0) & (traj.ys == 0))
    budgets = [1_000, 10_000, budget]
    census = walk.origin_visit_census(env, budgets, seed=3, stream=2)
    expected = [int(np.count_nonzero(at_origin <= b)) for b in budgets]
    assert census.tolist() == expected
    assert census[-1] == walk.origin_visits(traj)


def test_census_needs_positive_budgets():
    with pytest.raises(ValueError, match="DOMAIN"):
        walk.origin_visit_census(envs.alternate(), [0, 10], seed=1)
