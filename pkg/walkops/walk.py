"""Simple random walk on an oriented lattice.

Each step draws a tag uniformly from {1, 2, 3}: Up, Down, or one horizontal
step in the direction of the current line. Draws come in fixed-size chunks
from a counter-based stream, so a recorded trajectory and a streaming census
run on the same ``(seed, stream)`` see exactly the same moves.
"""

from dataclasses import dataclass
from enum import IntEnum
from typing import Iterator, List, Sequence, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from walkops.env import OrientationEnvironment, check_ordinate, check_ordinates
from walkops.errors import DomainError
from walkops.streams import generator

RECORD_CAP = 10**8
MOVE_CHUNK = 1 << 20
STREAM_MOVES = 1


class Move(IntEnum):
    UP = 1
    DOWN = 2
    HORIZONTAL = 3


@dataclass(frozen=True)
class LatticeState:
    x: int = 0
    y: int = 0

    def __post_init__(self) -> None:
        check_ordinate(self.x)
        check_ordinate(self.y)


def step(
    state: LatticeState, env: OrientationEnvironment, draw: Union[Move, int]
) -> LatticeState:
    move = Move(draw)
    if move is Move.UP:
        return LatticeState(state.x, state.y + 1)
    if move is Move.DOWN:
        return LatticeState(state.x, state.y - 1)
    return LatticeState(state.x + env.epsilon(state.y), state.y)


def advance(
    moves: NDArray[np.int8], env: OrientationEnvironment, x0: int = 0, y0: int = 0
) -> Tuple[NDArray[np.int64], NDArray[np.int64]]:
    """Positions after each move of ``moves``, starting from ``(x0, y0)``."""
    vertical = (moves == Move.UP).astype(np.int64) - (moves == Move.DOWN)
    ys = y0 + np.cumsum(vertical, dtype=np.int64)
    before = np.concatenate(([y0], ys))[:-1].astype(np.int64)
    horizontal = moves == Move.HORIZONTAL
    dx = np.zeros(moves.shape[0], dtype=np.int64)
    dx[horizontal] = env.signs(before[horizontal])
    xs = x0 + np.cumsum(dx, dtype=np.int64)
    check_ordinates(ys)
    check_ordinates(xs)
    return xs, ys


def move_chunks(
    seed: int, steps: int, stream: int = 0
) -> Iterator[NDArray[np.int8]]:
    if steps < 0:
        raise DomainError(f"steps must be >= 0, got {steps}")
    rng = generator(seed, STREAM_MOVES, stream)
    remaining = steps
    while remaining > 0:
        size = min(MOVE_CHUNK, remaining)
        yield rng.integers(1, 4, size=size, dtype=np.int8)
        remaining -= size


@dataclass(frozen=True)
class Trajectory:
    """Walk prefix: ``xs[k], ys[k]`` is the position after ``k`` moves."""

    moves: NDArray[np.int8]
    xs: NDArray[np.int64]
    ys: NDArray[np.int64]

    def __len__(self) -> int:
        return int(self.moves.shape[0])

    @property
    def start(self) -> LatticeState:
        return LatticeState(int(self.xs[0]), int(self.ys[0]))

    def position(self, k: int) -> LatticeState:
        return LatticeState(int(self.xs[k]), int(self.ys[k]))

    def states(self) -> List[LatticeState]:
        return [LatticeState(int(x), int(y)) for x, y in zip(self.xs, self.ys)]

    @classmethod
    def from_moves(
        cls, moves: Union[ArrayLike, Sequence[Move]], env: OrientationEnvironment
    ) -> "Trajectory":
        tags = np.asarray(moves, dtype=np.int8).reshape(-1)
        if tags.size and (tags.min() < 1 or tags.max() > 3):
            raise DomainError("move tags must be 1 (up), 2 (down) or 3 (horizontal)")
        xs, ys = advance(tags, env)
        zero = np.zeros(1, dtype=np.int64)
        return cls(tags, np.concatenate((zero, xs)), np.concatenate((zero, ys)))


def simulate(
    env: OrientationEnvironment,
    steps: int,
    seed: int,
    stream: int = 0,
    record_cap: int = RECORD_CAP,
) -> Trajectory:
    if steps > record_cap:
        raise DomainError(
            f"{steps} steps exceed the record cap {record_cap}; use a streaming census"
        )
    chunks = list(move_chunks(seed, steps, stream))
    moves = np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.int8)
    return Trajectory.from_moves(moves, env)


def origin_visits(trajectory: Trajectory) -> int:
    """Number of times k >= 0 spent at (0, 0), the start included."""
    at_origin = (trajectory.xs == 0) & (trajectory.ys == 0)
    return int(np.count_nonzero(at_origin))


def origin_visit_census(
    env: OrientationEnvironment, budgets: Sequence[int], seed: int, stream: int = 0
) -> NDArray[np.int64]:
    """Visits to (0, 0) up to each budget, time 0 included, without recording."""
    marks = np.asarray(sorted(budgets), dtype=np.int64)
    if marks.size == 0 or marks[0] < 1:
        raise DomainError("budgets must be positive")
    counts = np.ones(marks.size, dtype=np.int64)
    x, y, done = 0, 0, 0
    for chunk in move_chunks(seed, int(marks[-1]), stream):
        xs, ys = advance(chunk, env, x, y)
        hits = np.flatnonzero((xs == 0) & (ys == 0)) + done + 1
        # returns at time t count toward every budget >= t
        counts += np.searchsorted(hits, marks, side="right")
        x, y, done = int(xs[-1]), int(ys[-1]), done + chunk.shape[0]
    return counts
