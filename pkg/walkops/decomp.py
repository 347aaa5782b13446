"""Vertical skeleton and horizontal waiting times of a lattice walk.

The vertical increments of a walk (0 for a horizontal move, +1/-1 for a
vertical one) split into the non-zero steps ``psi`` and the horizontal runs
between them. ``xi_tilde[0]`` is the run before the first vertical move,
``xi_tilde[k]`` the run after the k-th one, and ``tail`` the run after the
last one. ``alpha`` is 1 when the walk opens with a horizontal move.

A :class:`SkeletonView` reads the skeleton ``Y`` together with the
environment: return times, epoch times on the lattice clock, occupation
counts and the embedded horizontal positions.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from walkops.env import OrientationEnvironment
from walkops.errors import DecompositionError, NotAvailableError
from walkops.walk import Move, Trajectory


@dataclass(frozen=True)
class VerticalIncrements:
    psi_tilde: NDArray[np.int8]

    def __len__(self) -> int:
        return int(self.psi_tilde.shape[0])

    @classmethod
    def of(cls, values: ArrayLike) -> "VerticalIncrements":
        arr = np.asarray(values, dtype=np.int8).reshape(-1)
        if np.any(np.abs(arr) > 1):
            raise DecompositionError("vertical increments must be in {-1, 0, 1}")
        return cls(arr)


@dataclass(frozen=True)
class Decomposition:
    psi: NDArray[np.int8]
    xi_tilde: NDArray[np.int64]
    alpha: int
    tail: int

    @property
    def vertical_moves(self) -> int:
        return int(self.psi.shape[0])

    @property
    def total_length(self) -> int:
        return self.vertical_moves + int(self.xi_tilde.sum()) + self.tail

    def validate(self) -> None:
        m = self.vertical_moves
        if self.xi_tilde.shape[0] != m:
            got = self.xi_tilde.shape[0]
            raise DecompositionError(f"{m} skeleton steps need {m} waits, got {got}")
        if m and not np.all(np.abs(self.psi) == 1):
            raise DecompositionError("skeleton steps must be +1 or -1")
        if np.any(self.xi_tilde < 0) or self.tail < 0:
            raise DecompositionError("waiting times must be >= 0")
        if self.alpha not in (0, 1):
            raise DecompositionError(f"alpha must be 0 or 1, got {self.alpha}")
        leading = int(self.xi_tilde[0]) if m else self.tail
        if self.alpha != int(leading > 0):
            raise DecompositionError(
                f"alpha={self.alpha} disagrees with a leading run of {leading}"
            )


def extract_increments(trajectory: Trajectory) -> VerticalIncrements:
    moves = trajectory.moves
    psi = (moves == Move.UP).astype(np.int8) - (moves == Move.DOWN).astype(np.int8)
    return VerticalIncrements(psi)


def decompose(increments: Union[VerticalIncrements, ArrayLike]) -> Decomposition:
    if not isinstance(increments, VerticalIncrements):
        increments = VerticalIncrements.of(increments)
    values = increments.psi_tilde
    length = values.shape[0]
    at = np.flatnonzero(values)
    if at.size == 0:
        return Decomposition(
            np.zeros(0, dtype=np.int8),
            np.zeros(0, dtype=np.int64),
            int(length > 0),
            int(length),
        )
    waits = np.diff(at, prepend=-1).astype(np.int64) - 1
    return Decomposition(
        values[at].astype(np.int8),
        waits,
        int(values[0] == 0),
        int(length - 1 - at[-1]),
    )


def reconstruct(decomposition: Decomposition) -> VerticalIncrements:
    decomposition.validate()
    out = np.zeros(decomposition.total_length, dtype=np.int8)
    m = decomposition.vertical_moves
    at = np.arange(m, dtype=np.int64) + np.cumsum(decomposition.xi_tilde)
    out[at] = decomposition.psi
    return VerticalIncrements(out)


# =========================
# Skeleton view
# =========================


@dataclass(frozen=True)
class SkeletonView:
    """Skeleton ``Y`` read in an environment, all arrays indexed from n = 0.

    ``T[n]`` is the lattice time of the n-th vertical move plus one,
    ``Delta[n]`` is the sum of epsilon over ``Y[0..n-1]``, ``sigma`` the
    return times of ``Y`` to 0 (``sigma[0] == 0``).
    """

    decomposition: Decomposition
    Y: NDArray[np.int64]
    level_signs: NDArray[np.int64]
    T: NDArray[np.int64]
    Delta: NDArray[np.int64]
    sigma: NDArray[np.int64]

    @property
    def length(self) -> int:
        return int(self.Y.shape[0] - 1)

    def _check(self, n: int) -> None:
        if not 0 <= n <= self.length:
            raise NotAvailableError(f"skeleton index {n} outside 0..{self.length}")

    def eta(self, n: int, y: int) -> int:
        """Visits of ``Y[0..n]`` to level ``y``."""
        self._check(n)
        return int(np.count_nonzero(self.Y[: n + 1] == y))

    def occupation(self, n: int) -> Dict[int, int]:
        self._check(n)
        levels, counts = np.unique(self.Y[: n + 1], return_counts=True)
        return {int(y): int(c) for y, c in zip(levels, counts)}

    def sign_counts(self, n: int) -> Tuple[int, int]:
        """Occupation of ``Y[0..n-1]`` split by line orientation (right, left)."""
        self._check(n)
        right = int(np.count_nonzero(self.level_signs[:n] > 0))
        return right, n - right

    @cached_property
    def X(self) -> NDArray[np.int64]:
        waits = self.decomposition.xi_tilde
        return np.concatenate(([0], np.cumsum(self.level_signs * waits))).astype(
            np.int64
        )


def skeleton_view(
    decomposition: Decomposition, env: OrientationEnvironment
) -> SkeletonView:
    psi = decomposition.psi.astype(np.int64)
    m = psi.shape[0]
    Y = np.concatenate(([0], np.cumsum(psi))).astype(np.int64)
    signs = env.signs(Y[:-1])
    steps = np.arange(1, m + 1, dtype=np.int64)
    T = np.concatenate(([0], steps + np.cumsum(decomposition.xi_tilde))).astype(
        np.int64
    )
    Delta = np.concatenate(([0], np.cumsum(signs))).astype(np.int64)
    return SkeletonView(
        decomposition, Y, signs, T, Delta, np.flatnonzero(Y == 0).astype(np.int64)
    )


def embedded_positions(
    decomposition: Decomposition, env: OrientationEnvironment
) -> NDArray[np.int64]:
    """X_n for n = 0..m: horizontal position just after the n-th vertical move."""
    return skeleton_view(decomposition, env).X


def alternating_occupation_sum(view: SkeletonView, n: int) -> int:
    """Sum of (-1)^y * eta over ``Y[0 .. sigma_n - 1]``."""
    if not 0 <= n < view.sigma.shape[0]:
        returns = view.sigma.shape[0] - 1
        raise NotAvailableError(f"return {n} not reached: only {returns} returns")
    end = int(view.sigma[n])
    return int(np.sum(1 - 2 * (view.Y[:end] & 1)))


# =========================
# Returns to the origin
# =========================


def epoch_indicators(
    trajectory: Trajectory, env: OrientationEnvironment
) -> Tuple[NDArray[np.int64], NDArray[np.bool_]]:
    """Per return epoch n >= 1: origin visits during the epoch's horizontal run,
    and whether that run straddles x = 0."""
    dec = decompose(extract_increments(trajectory))
    view = skeleton_view(dec, env)
    m = view.length
    epochs = view.sigma[1:]
    waits = np.append(dec.xi_tilde, dec.tail)[epochs]
    starts = view.X[epochs]
    if env.epsilon(0) > 0:
        straddles = (starts <= 0) & (starts + waits >= 0)
    else:
        straddles = (starts - waits <= 0) & (starts >= 0)
    begin = view.T[epochs]
    end = begin + waits
    visits = np.flatnonzero((trajectory.xs == 0) & (trajectory.ys == 0))
    visits = visits[visits > 0]
    counts = np.searchsorted(visits, end, side="right") - np.searchsorted(
        visits, begin, side="left"
    )
    assert epochs.size == 0 or int(epochs[-1]) <= m
    return counts.astype(np.int64), straddles


def straddle_return_count(
    trajectory: Trajectory, env: OrientationEnvironment
) -> Tuple[int, int]:
    """(returns to the origin, epochs whose horizontal run straddles 0)."""
    counts, straddles = epoch_indicators(trajectory, env)
    if counts.size and counts.max() > 1:
        raise AssertionError("an epoch run visited the origin twice")
    return int(counts.sum()), int(np.count_nonzero(straddles))
