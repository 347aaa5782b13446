"""Vectorized Monte Carlo for the vertical skeleton and the embedded walk.

Samplers take a numpy ``Generator`` and a batch size and return one value per
walker. Callers split trials into fixed blocks, one stream per block (see
:mod:`walkops.estimators`), so the draws here never depend on thread count.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from walkops.analytics import SpectralParams, first_return_survival
from walkops.env import Kind, OrientationEnvironment, signs_rows
from walkops.errors import DomainError

SURVIVAL_TABLE_SIZE = 1 << 20
CELLS_PER_CHUNK = 1 << 20
MAX_HALF_RETURN = 1 << 40


@lru_cache(maxsize=4)
def _survival_table(size: int) -> NDArray[np.float64]:
    return first_return_survival(np.arange(size, dtype=np.int64))


def sample_first_return_times(
    rng: np.random.Generator, shape: Tuple[int, ...]
) -> NDArray[np.int64]:
    """First return times of a simple walk to 0, by inverse CDF.

    Exact below 2 * SURVIVAL_TABLE_SIZE; beyond that the survival function
    C(2k, k) / 4^k is inverted through its expansion (pi k)^-1/2 (1 - 1/(8k)).
    """
    survival = _survival_table(SURVIVAL_TABLE_SIZE)
    u = 1.0 - rng.random(shape)
    half = np.searchsorted(-survival, -u, side="right").astype(np.int64)
    far = half >= survival.shape[0]
    if np.any(far):
        tail = 1.0 / (math.pi * u[far] * u[far]) - 0.25
        half[far] = np.floor(np.minimum(tail, MAX_HALF_RETURN)).astype(np.int64) + 1
    return 2 * half


def _waits(
    rng: np.random.Generator, params: SpectralParams, count: NDArray[np.int64]
) -> NDArray[np.int64]:
    """Sum of ``count`` independent geometric waits, elementwise (0 for count 0)."""
    safe = np.maximum(count, 1)
    total = rng.negative_binomial(safe, params.p).astype(np.int64)
    return np.where(count > 0, total, 0)


def alternate_return_positions(
    rng: np.random.Generator, params: SpectralParams, n: int, size: int
) -> Tuple[NDArray[np.int64], NDArray[np.int64]]:
    """X at the n-th skeleton return on the alternate lattice, and sigma_n.

    Levels alternate in parity along the skeleton, so the sigma_n / 2 even
    levels and sigma_n / 2 odd levels each carry a negative binomial total.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    sigma = sample_first_return_times(rng, (size, n)).sum(axis=1)
    half = sigma // 2
    return _waits(rng, params, half) - _waits(rng, params, half), sigma


def _halfplane_excursions(
    rng: np.random.Generator, params: SpectralParams, n: int, size: int
) -> Tuple[NDArray[np.int64], NDArray[np.int64], NDArray[np.int64]]:
    """(X, Delta, sigma) at the n-th return on the half-plane lattice.

    An upward excursion of length tau sits on right-oriented lines; a
    downward one spends its first step at level 0 and tau - 1 steps below.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    tau = sample_first_return_times(rng, (size, n))
    up = rng.random((size, n)) < 0.5
    right = np.where(up, tau, 1).sum(axis=1)
    left = np.where(up, 0, tau - 1).sum(axis=1)
    x = _waits(rng, params, right) - _waits(rng, params, left)
    return x, right - left, tau.sum(axis=1)


def halfplane_return_positions(
    rng: np.random.Generator, params: SpectralParams, n: int, size: int
) -> Tuple[NDArray[np.int64], NDArray[np.int64]]:
    """X at the n-th skeleton return on the half-plane lattice, and sigma_n."""
    x, _, sigma = _halfplane_excursions(rng, params, n, size)
    return x, sigma


def halfplane_identity_rhs(
    rng: np.random.Generator, n: int, size: int
) -> Tuple[NDArray[np.int64], NDArray[np.int64]]:
    """n + sum of rho_k (tau_k - 1) with Rademacher rho, and the total sigma_n."""
    tau = sample_first_return_times(rng, (size, n))
    rho = 2 * rng.integers(0, 2, size=(size, n), dtype=np.int64) - 1
    return n + (rho * (tau - 1)).sum(axis=1), tau.sum(axis=1)


@dataclass(frozen=True)
class ReturnSample:
    x: NDArray[np.int64]
    delta: NDArray[np.int64]
    sigma: NDArray[np.int64]
    censored: NDArray[np.bool_]

    @property
    def censored_fraction(self) -> float:
        return float(np.mean(self.censored)) if self.censored.size else 0.0


def run_until_returns(
    env: OrientationEnvironment,
    n: int,
    rng: np.random.Generator,
    size: int,
    params: SpectralParams,
    cap: int,
    with_waits: bool = True,
) -> ReturnSample:
    """Run ``size`` skeletons until their n-th return to 0 or ``cap`` steps.

    Per walker: X and Delta summed over levels Y_0 .. Y_{sigma_n - 1}, and
    sigma_n (-1 when censored).
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    out_x = np.zeros(size, dtype=np.int64)
    out_delta = np.zeros(size, dtype=np.int64)
    out_sigma = np.full(size, -1, dtype=np.int64)
    alive = np.arange(size)
    y = np.zeros(size, dtype=np.int64)
    x = np.zeros(size, dtype=np.int64)
    delta = np.zeros(size, dtype=np.int64)
    returns = np.zeros(size, dtype=np.int64)
    elapsed = 0
    while alive.size and elapsed < cap:
        width = int(min(max(CELLS_PER_CHUNK // alive.size, 64), cap - elapsed))
        steps = 2 * rng.integers(0, 2, size=(alive.size, width), dtype=np.int64) - 1
        path = y[:, None] + np.cumsum(steps, axis=1)
        before = np.concatenate((y[:, None], path[:, :-1]), axis=1)
        eps = env.signs(before)
        cum_eps = np.cumsum(eps, axis=1)
        if with_waits:
            w = rng.geometric(params.p, size=steps.shape).astype(np.int64) - 1
            cum_x = np.cumsum(eps * w, axis=1)
        else:
            cum_x = np.zeros_like(cum_eps)
        hits = returns[:, None] + np.cumsum(path == 0, axis=1)
        reached = hits >= n
        done = reached[:, -1]
        rows = np.flatnonzero(done)
        col = np.argmax(reached[rows], axis=1)
        ids = alive[rows]
        out_delta[ids] = delta[rows] + cum_eps[rows, col]
        out_x[ids] = x[rows] + cum_x[rows, col]
        out_sigma[ids] = elapsed + col + 1
        keep = ~done
        alive = alive[keep]
        y = path[keep, -1]
        x = x[keep] + cum_x[keep, -1]
        delta = delta[keep] + cum_eps[keep, -1]
        returns = hits[keep, -1]
        elapsed += width
    return ReturnSample(out_x, out_delta, out_sigma, out_sigma < 0)


def return_positions(
    env: OrientationEnvironment,
    n: int,
    rng: np.random.Generator,
    size: int,
    params: SpectralParams,
    cap: int,
) -> ReturnSample:
    """X at the n-th return, through the excursion samplers where they apply.

    Walkers whose sigma_n exceeds ``cap`` are censored exactly as in
    ``run_until_returns``: flagged, with sigma set to -1.
    """
    if env.kind is Kind.ALTERNATE:
        x, sigma = alternate_return_positions(rng, params, n, size)
        delta = np.zeros(size, dtype=np.int64)
    elif env.kind is Kind.HALFPLANE:
        x, delta, sigma = _halfplane_excursions(rng, params, n, size)
    else:
        return run_until_returns(env, n, rng, size, params, cap)
    censored = sigma > cap
    return ReturnSample(x, delta, np.where(censored, -1, sigma), censored)


@dataclass(frozen=True)
class GridSample:
    """X_n and Delta_n per walker (rows) at each grid point (columns)."""

    grid: NDArray[np.int64]
    x: NDArray[np.int64]
    delta: NDArray[np.int64]


def embedded_walk(
    envs: Sequence[OrientationEnvironment],
    grid: Sequence[int],
    rng: np.random.Generator,
    params: SpectralParams,
    with_waits: bool = True,
) -> GridSample:
    """Walker k runs in ``envs[k]``; X and Delta recorded after each grid step count."""
    marks = np.asarray(sorted(grid), dtype=np.int64)
    if marks.size == 0 or marks[0] < 1:
        raise DomainError("grid points must be >= 1")
    size = len(envs)
    out_x = np.zeros((size, marks.size), dtype=np.int64)
    out_delta = np.zeros((size, marks.size), dtype=np.int64)
    y = np.zeros(size, dtype=np.int64)
    x = np.zeros(size, dtype=np.int64)
    delta = np.zeros(size, dtype=np.int64)
    done = 0
    total = int(marks[-1])
    while done < total:
        width = int(min(max(CELLS_PER_CHUNK // size, 64), total - done))
        steps = 2 * rng.integers(0, 2, size=(size, width), dtype=np.int64) - 1
        path = y[:, None] + np.cumsum(steps, axis=1)
        before = np.concatenate((y[:, None], path[:, :-1]), axis=1)
        eps = signs_rows(envs, before)
        cum_delta = delta[:, None] + np.cumsum(eps, axis=1)
        if with_waits:
            w = rng.geometric(params.p, size=steps.shape).astype(np.int64) - 1
            cum_x = x[:, None] + np.cumsum(eps * w, axis=1)
        else:
            cum_x = np.repeat(x[:, None], width, axis=1)
        inside = np.flatnonzero((marks > done) & (marks <= done + width))
        cols = marks[inside] - done - 1
        out_x[:, inside] = cum_x[:, cols]
        out_delta[:, inside] = cum_delta[:, cols]
        y = path[:, -1]
        x = cum_x[:, -1]
        delta = cum_delta[:, -1]
        done += width
    return GridSample(marks, out_x, out_delta)


def skeleton_path(rng: np.random.Generator, steps: int) -> NDArray[np.int64]:
    """Y_0 .. Y_steps of a simple symmetric walk."""
    moves = 2 * rng.integers(0, 2, size=steps, dtype=np.int64) - 1
    return np.concatenate(([0], np.cumsum(moves))).astype(np.int64)
