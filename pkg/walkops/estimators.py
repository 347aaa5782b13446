"""Monte Carlo estimators and statistical tests.

Trials are cut into fixed blocks of ``RunSettings.block_size``; block ``b``
of quantity ``Q`` draws from ``generator(seed, Q, b)``. Blocks may run on a
thread pool, results are reassembled in block order, so every estimate is
bit-identical for any ``threads`` value.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, TypeVar

import numpy as np
from numpy.typing import NDArray
from scipy import stats

from walkops.analytics import SpectralParams
from walkops.config import RunSettings
from walkops.decomp import decompose
from walkops.env import OrientationEnvironment, ensemble, halfplane
from walkops.errors import DomainError, InsufficientDataError
from walkops.sampling import (
    embedded_walk,
    halfplane_identity_rhs,
    return_positions,
    run_until_returns,
    skeleton_path,
)
from walkops.streams import generator
from walkops.walk import move_chunks, origin_visit_census

T = TypeVar("T")

STREAM_DELTA = 11
STREAM_SPEED = 12
STREAM_FLUCTUATIONS = 13
STREAM_IDENTITY_LHS = 14
STREAM_IDENTITY_RHS = 15
STREAM_PERMUTATION = 16
STREAM_RETURNS = 17
STREAM_DELTA_RETURNS = 18

MIN_GRID_POINTS = 5
MIN_GRID_DECADES = 1.5
POWER_WARNING_TRIALS = 200


@dataclass(frozen=True)
class MomentParams:
    m1: float
    m2: float

    def __post_init__(self) -> None:
        if self.m1 <= 0 or self.s2 <= 0:
            raise DomainError(f"need m1 > 0 and s2 > 0, got m1={self.m1}, s2={self.s2}")

    @property
    def s2(self) -> float:
        return self.m2 - self.m1 * self.m1


def default_moments(params: SpectralParams) -> MomentParams:
    p, q = params.p, params.q
    return MomentParams(q / p, q * (1 + q) / (p * p))


@dataclass(frozen=True)
class EstimateRow:
    quantity: str
    n: int
    estimate: float
    stderr: float
    censored_fraction: float = 0.0


# =========================
# Block plumbing
# =========================


def trial_blocks(trials: int, block_size: int) -> List[Tuple[int, int, int]]:
    """(block index, first trial, size) covering ``trials`` in order."""
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    return [
        (b, start, min(block_size, trials - start))
        for b, start in enumerate(range(0, trials, block_size))
    ]


def map_blocks(
    settings: RunSettings, trials: int, work: Callable[[int, int, int], T]
) -> List[T]:
    blocks = trial_blocks(trials, settings.block_size)
    if settings.threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=settings.threads) as pool:
            return list(pool.map(lambda blk: work(*blk), blocks))
    return [work(*blk) for blk in blocks]


def trial_environments(
    env: OrientationEnvironment, trials: int, environments: int = 1
) -> List[OrientationEnvironment]:
    """Environment of each trial: ``environments`` members in contiguous groups."""
    members = ensemble(env, environments)
    return [members[t * environments // trials] for t in range(trials)]


def _mean_stderr(values: NDArray[np.float64]) -> Tuple[float, float]:
    if values.size == 0:
        return math.nan, math.nan
    if values.size == 1:
        return float(values[0]), math.nan
    stderr = float(np.std(values, ddof=1)) / math.sqrt(values.size)
    return float(np.mean(values)), stderr


# =========================
# Regression
# =========================


@dataclass(frozen=True)
class ScalingFit:
    exponent: float
    intercept: float
    r_squared: float
    stderr: float
    n_grid: Tuple[int, ...]
    values: Tuple[float, ...]
    sample_sizes: Tuple[int, ...] = ()


def _check_grid(ns: Sequence[int]) -> None:
    if len(ns) < MIN_GRID_POINTS:
        raise InsufficientDataError(
            f"{len(ns)} grid points, need at least {MIN_GRID_POINTS}"
        )
    lo, hi = min(ns), max(ns)
    if lo < 1 or math.log10(hi / lo) < MIN_GRID_DECADES:
        raise InsufficientDataError(
            f"grid [{lo}, {hi}] spans less than {MIN_GRID_DECADES} decades"
        )


def fit_power_law(
    ns: Sequence[int], values: Sequence[float], sample_sizes: Sequence[int] = ()
) -> ScalingFit:
    """Least squares of ln(value) on ln(n)."""
    _check_grid(ns)
    if min(values) <= 0:
        raise InsufficientDataError("power-law fit needs positive values")
    fit = stats.linregress(np.log(np.asarray(ns, float)), np.log(np.asarray(values)))
    return ScalingFit(
        float(fit.slope),
        float(fit.intercept),
        float(fit.rvalue**2),
        float(fit.stderr),
        tuple(int(n) for n in ns),
        tuple(float(v) for v in values),
        tuple(int(s) for s in sample_sizes),
    )


def fit_log_growth(ns: Sequence[int], values: Sequence[float]) -> ScalingFit:
    """Least squares of value on ln(n); ``exponent`` holds the slope."""
    if len(ns) < 3:
        raise InsufficientDataError("log-growth fit needs at least 3 points")
    fit = stats.linregress(np.log(np.asarray(ns, float)), np.asarray(values, float))
    return ScalingFit(
        float(fit.slope),
        float(fit.intercept),
        float(fit.rvalue**2),
        float(fit.stderr),
        tuple(int(n) for n in ns),
        tuple(float(v) for v in values),
    )


# =========================
# Delta scaling and speed
# =========================


@dataclass(frozen=True)
class DeltaScaling:
    fit: ScalingFit
    rows: Tuple[EstimateRow, ...]


def delta_scaling(
    env: OrientationEnvironment,
    n_grid: Sequence[int],
    trials: int,
    seed: int,
    settings: RunSettings = RunSettings(),
    environments: Optional[int] = None,
) -> DeltaScaling:
    """Fit E|Delta_n| ~ n^beta; random environments default to one per trial."""
    grid = sorted(set(int(n) for n in n_grid))
    _check_grid(grid)
    if trials < POWER_WARNING_TRIALS:
        logging.warning(
            "statistical power: %d trials for delta scaling, %d recommended",
            trials,
            POWER_WARNING_TRIALS,
        )
    envs = trial_environments(env, trials, environments or trials)
    params = SpectralParams()

    def work(block: int, start: int, size: int) -> NDArray[np.int64]:
        rng = generator(seed, STREAM_DELTA, block)
        sample = embedded_walk(envs[start : start + size], grid, rng, params, False)
        return np.abs(sample.delta)

    absolute = np.concatenate(map_blocks(settings, trials, work)).astype(np.float64)
    rows = []
    for j, n in enumerate(grid):
        mean, err = _mean_stderr(absolute[:, j])
        rows.append(EstimateRow("delta-scaling", n, mean, err))
    fit = fit_power_law(grid, [r.estimate for r in rows], [trials] * len(grid))
    rows.append(EstimateRow("delta-exponent", 0, fit.exponent, fit.stderr))
    return DeltaScaling(fit, tuple(rows))


def delta_at_returns(
    env: OrientationEnvironment,
    n: int,
    trials: int,
    seed: int,
    settings: RunSettings = RunSettings(),
) -> EstimateRow:
    """Largest |Delta| at the n-th skeleton return over uncensored trials."""
    params = SpectralParams()

    def work(block: int, start: int, size: int) -> Tuple[int, int]:
        rng = generator(seed, STREAM_DELTA_RETURNS, block)
        sample = run_until_returns(env, n, rng, size, params, settings.step_cap, False)
        kept = np.abs(sample.delta[~sample.censored])
        return int(kept.max()) if kept.size else 0, int(sample.censored.sum())

    parts = map_blocks(settings, trials, work)
    censored = sum(c for _, c in parts) / trials
    _warn_censored("delta at returns", censored)
    worst = float(max(m for m, _ in parts))
    return EstimateRow("delta-at-returns", n, worst, 0.0, censored)


@dataclass(frozen=True)
class SpeedEstimate:
    n: int
    trials: int
    mean_abs_speed: float
    speed_stderr: float
    mean_abs_centered: float
    centered_stderr: float
    centered_mean: float
    centered_mean_stderr: float
    variance_ratio: float
    variance_ratio_stderr: float

    def rows(self) -> Tuple[EstimateRow, ...]:
        return (
            EstimateRow("speed", self.n, self.mean_abs_speed, self.speed_stderr),
            EstimateRow(
                "centered-speed", self.n, self.mean_abs_centered, self.centered_stderr
            ),
            EstimateRow(
                "centered-mean", self.n, self.centered_mean, self.centered_mean_stderr
            ),
            EstimateRow(
                "variance-ratio",
                self.n,
                self.variance_ratio,
                self.variance_ratio_stderr,
            ),
        )


def speed_estimate(
    env: OrientationEnvironment,
    n: int,
    trials: int,
    seed: int,
    settings: RunSettings = RunSettings(),
    environments: int = 1,
    params: SpectralParams = SpectralParams(),
) -> SpeedEstimate:
    """|X_n|/n, |X_n - m1 Delta_n|/n and Var(X_n - m1 Delta_n) / (n s2)."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    moments = default_moments(params)
    envs = trial_environments(env, trials, environments)

    def work(
        block: int, start: int, size: int
    ) -> Tuple[NDArray[np.int64], NDArray[np.int64]]:
        rng = generator(seed, STREAM_SPEED, block)
        sample = embedded_walk(envs[start : start + size], [n], rng, params)
        return sample.x[:, 0], sample.delta[:, 0]

    parts = map_blocks(settings, trials, work)
    x = np.concatenate([p[0] for p in parts]).astype(np.float64)
    delta = np.concatenate([p[1] for p in parts]).astype(np.float64)
    centered = x - moments.m1 * delta
    speed, speed_err = _mean_stderr(np.abs(x) / n)
    abs_centered, abs_centered_err = _mean_stderr(np.abs(centered) / n)
    c_mean, c_err = _mean_stderr(centered)
    if trials > 1:
        var = float(np.var(centered, ddof=1))
        m4 = float(np.mean((centered - centered.mean()) ** 4))
        spread = max(m4 - var * var * (trials - 3) / (trials - 1), 0.0)
        var_err = math.sqrt(spread / trials)
        ratio, ratio_err = var / (n * moments.s2), var_err / (n * moments.s2)
    else:
        ratio, ratio_err = math.nan, math.nan
    return SpeedEstimate(
        n,
        trials,
        speed,
        speed_err,
        abs_centered,
        abs_centered_err,
        c_mean,
        c_err,
        ratio,
        ratio_err,
    )


# =========================
# Fluctuation events
# =========================


@dataclass(frozen=True)
class FluctuationReport:
    n: int
    max_abs_Y: int
    max_eta: int
    abs_Delta: int
    thresholds: Tuple[float, float, float]

    @property
    def a1(self) -> bool:
        return self.max_abs_Y < self.thresholds[0]

    @property
    def a2(self) -> bool:
        return self.max_eta < self.thresholds[1]

    @property
    def b(self) -> bool:
        return self.a1 and self.a2 and self.abs_Delta > self.thresholds[2]


@dataclass(frozen=True)
class FluctuationSummary:
    n: int
    deltas: Tuple[float, float, float]
    trials: int
    freq_not_a1: float
    freq_not_a2: float
    freq_b: float
    bound_not_a1: float
    reports: Tuple[FluctuationReport, ...] = field(repr=False, default=())

    def rows(self) -> Tuple[EstimateRow, ...]:
        def err(f: float) -> float:
            return math.sqrt(f * (1 - f) / self.trials)

        return (
            EstimateRow("not-A1", self.n, self.freq_not_a1, err(self.freq_not_a1)),
            EstimateRow("not-A2", self.n, self.freq_not_a2, err(self.freq_not_a2)),
            EstimateRow("B", self.n, self.freq_b, err(self.freq_b)),
            EstimateRow("not-A1-bound", self.n, self.bound_not_a1, 0.0),
        )


def fluctuation_report(
    env: OrientationEnvironment,
    path: NDArray[np.int64],
    deltas: Tuple[float, float, float],
) -> FluctuationReport:
    """Events for a skeleton ``path`` of 2n steps read in ``env``."""
    n = (path.shape[0] - 1) // 2
    visited = path[: 2 * n]
    occupation = np.bincount(visited - visited.min())
    thresholds = tuple(n ** (0.5 + d) for d in deltas)
    return FluctuationReport(
        n,
        int(np.max(np.abs(path))),
        int(occupation.max()),
        abs(int(env.signs(visited).sum())),
        (thresholds[0], thresholds[1], thresholds[2]),
    )


def fluctuation_diagnostics(
    env: OrientationEnvironment,
    n: int,
    trials: int,
    deltas: Tuple[float, float, float],
    seed: int,
    settings: RunSettings = RunSettings(),
    environments: Optional[int] = None,
) -> FluctuationSummary:
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if min(deltas) <= 0:
        raise DomainError(f"deltas must be > 0, got {deltas}")
    envs = trial_environments(env, trials, environments or trials)

    def work(block: int, start: int, size: int) -> List[FluctuationReport]:
        rng = generator(seed, STREAM_FLUCTUATIONS, block)
        return [
            fluctuation_report(envs[start + k], skeleton_path(rng, 2 * n), deltas)
            for k in range(size)
        ]

    reports = [r for part in map_blocks(settings, trials, work) for r in part]
    return FluctuationSummary(
        n,
        deltas,
        trials,
        sum(not r.a1 for r in reports) / trials,
        sum(not r.a2 for r in reports) / trials,
        sum(r.b for r in reports) / trials,
        min(1.0, 2.0 * math.exp(-(n ** (2 * deltas[0])))),
        tuple(reports),
    )


# =========================
# Half-plane occupation identity
# =========================


@dataclass(frozen=True)
class IdentityTest:
    n: int
    samples: int
    statistic: float
    pvalue: float
    asymptotic_pvalue: float
    alpha: float
    censored_fraction: float
    mean_lhs: float
    mean_rhs: float
    mean_diff_stderr: float

    @property
    def passed(self) -> bool:
        return self.pvalue >= self.alpha

    def rows(self) -> Tuple[EstimateRow, ...]:
        censored = self.censored_fraction
        return (
            EstimateRow("h-identity-ks", self.n, self.statistic, 0.0, censored),
            EstimateRow("h-identity-pvalue", self.n, self.pvalue, 0.0, censored),
            EstimateRow(
                "h-identity-mean-diff",
                self.n,
                self.mean_lhs - self.mean_rhs,
                self.mean_diff_stderr,
                self.censored_fraction,
            ),
        )


def _ks_statistic(a: NDArray[np.float64], b: NDArray[np.float64]) -> float:
    return float(stats.ks_2samp(a, b, method="asymp").statistic)


def h_identity_test(
    n: int,
    samples: int,
    seed: int,
    settings: RunSettings = RunSettings(),
    alpha: float = 1e-3,
    n_resamples: int = 9999,
) -> IdentityTest:
    """Two-sample test: half-plane occupation sum at sigma_n vs n + sum rho (tau - 1).

    The KS statistic is calibrated by a seeded permutation of the pooled
    samples; both sides drop draws with sigma_n above the step cap.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    env = halfplane()
    params = SpectralParams()

    def lhs(
        block: int, start: int, size: int
    ) -> Tuple[NDArray[np.int64], NDArray[np.bool_]]:
        rng = generator(seed, STREAM_IDENTITY_LHS, block)
        sample = run_until_returns(env, n, rng, size, params, settings.step_cap, False)
        return sample.delta, sample.censored

    def rhs(
        block: int, start: int, size: int
    ) -> Tuple[NDArray[np.int64], NDArray[np.bool_]]:
        rng = generator(seed, STREAM_IDENTITY_RHS, block)
        value, sigma = halfplane_identity_rhs(rng, n, size)
        return value, sigma > settings.step_cap

    left = map_blocks(settings, samples, lhs)
    right = map_blocks(settings, samples, rhs)
    a_all = np.concatenate([v for v, _ in left])
    a_cut = np.concatenate([c for _, c in left])
    b_all = np.concatenate([v for v, _ in right])
    b_cut = np.concatenate([c for _, c in right])
    censored = float(a_cut.sum() + b_cut.sum()) / (2 * samples)
    _warn_censored("h-identity", censored)
    a = a_all[~a_cut].astype(np.float64)
    b = b_all[~b_cut].astype(np.float64)
    if a.size < 2 or b.size < 2:
        raise InsufficientDataError("too few uncensored samples for a two-sample test")

    observed = stats.ks_2samp(a, b, method="asymp")
    permuted = stats.permutation_test(
        (a, b),
        _ks_statistic,
        permutation_type="independent",
        vectorized=False,
        n_resamples=n_resamples,
        alternative="greater",
        random_state=generator(seed, STREAM_PERMUTATION, n),
    )
    pvalue = float(permuted.pvalue)
    diff_err = math.sqrt(np.var(a, ddof=1) / a.size + np.var(b, ddof=1) / b.size)
    result = IdentityTest(
        n,
        samples,
        float(observed.statistic),
        pvalue,
        float(observed.pvalue),
        alpha,
        censored,
        float(a.mean()),
        float(b.mean()),
        diff_err,
    )
    logging.info(
        "h-identity n=%d: KS=%.4f p=%.4f (asymptotic %.4f)",
        n,
        result.statistic,
        result.pvalue,
        result.asymptotic_pvalue,
    )
    return result


# =========================
# Visits and return epochs
# =========================


@dataclass(frozen=True)
class VisitCensus:
    budgets: Tuple[int, ...]
    means: Tuple[float, ...]
    stderrs: Tuple[float, ...]
    per_environment: Tuple[Tuple[float, ...], ...]

    def rows(self) -> Tuple[EstimateRow, ...]:
        out = [
            EstimateRow("visits", b, m, s)
            for b, m, s in zip(self.budgets, self.means, self.stderrs)
        ]
        if len(self.per_environment) > 1:
            for k, means in enumerate(self.per_environment):
                out.extend(
                    EstimateRow(f"visits-env{k}", b, m, math.nan)
                    for b, m in zip(self.budgets, means)
                )
        return tuple(out)


def visit_census(
    env: OrientationEnvironment,
    budgets: Sequence[int],
    trials: int,
    seed: int,
    settings: RunSettings = RunSettings(),
    environments: int = 1,
) -> VisitCensus:
    """Mean visits to (0, 0) within each step budget, time 0 included.

    Trial t walks stream t.
    """
    marks = sorted(set(int(b) for b in budgets))
    envs = trial_environments(env, trials, environments)

    def work(block: int, start: int, size: int) -> NDArray[np.int64]:
        return np.stack(
            [
                origin_visit_census(envs[t], marks, seed, stream=t)
                for t in range(start, start + size)
            ]
        )

    counts = np.concatenate(map_blocks(settings, trials, work)).astype(np.float64)
    summary = [_mean_stderr(counts[:, j]) for j in range(len(marks))]
    groups = np.array([t * environments // trials for t in range(trials)])
    per_env = tuple(
        tuple(float(v) for v in counts[groups == k].mean(axis=0))
        for k in range(environments)
    )
    return VisitCensus(
        tuple(marks),
        tuple(m for m, _ in summary),
        tuple(s for _, s in summary),
        per_env,
    )


def _return_sample(
    env: OrientationEnvironment,
    n: int,
    trials: int,
    seed: int,
    settings: RunSettings,
    params: SpectralParams,
) -> Tuple[NDArray[np.int64], float]:
    def work(
        block: int, start: int, size: int
    ) -> Tuple[NDArray[np.int64], NDArray[np.bool_]]:
        rng = generator(seed, STREAM_RETURNS, n, block)
        sample = return_positions(env, n, rng, size, params, settings.step_cap)
        return sample.x, sample.censored

    parts = map_blocks(settings, trials, work)
    x = np.concatenate([p[0] for p in parts])
    cut = np.concatenate([p[1] for p in parts])
    censored = float(cut.mean())
    _warn_censored("return positions", censored)
    return x[~cut], censored


def zero_return_frequency(
    env: OrientationEnvironment,
    n: int,
    trials: int,
    seed: int,
    settings: RunSettings = RunSettings(),
    params: SpectralParams = SpectralParams(),
) -> EstimateRow:
    """Empirical P(X = 0 at the n-th skeleton return)."""
    x, censored = _return_sample(env, n, trials, seed, settings, params)
    hit, err = _mean_stderr((x == 0).astype(np.float64))
    return EstimateRow("zero-return", n, hit, err, censored)


def characteristic_mc(
    env: OrientationEnvironment,
    theta: float,
    n: int,
    trials: int,
    seed: int,
    settings: RunSettings = RunSettings(),
    params: SpectralParams = SpectralParams(),
) -> Tuple[complex, float, float, float]:
    """Empirical E exp(i theta X) at the n-th return.

    Returns ``(mean, stderr of the real part, stderr of the imaginary part,
    censored fraction)``.
    """
    x, censored = _return_sample(env, n, trials, seed, settings, params)
    re, re_err = _mean_stderr(np.cos(theta * x))
    im, im_err = _mean_stderr(np.sin(theta * x))
    return complex(re, im), re_err, im_err, censored


def _warn_censored(what: str, fraction: float) -> None:
    if fraction > 0:
        logging.warning(
            "censored sample: %.4f%% of %s beyond the step cap", 100 * fraction, what
        )


# =========================
# Move and run-length laws
# =========================


@dataclass(frozen=True)
class GoodnessOfFit:
    statistic: float
    pvalue: float
    count: int
    mean: float
    mean_stderr: float


def waiting_time_gof(steps: int, seed: int, stream: int = 0) -> GoodnessOfFit:
    """Chi-square of completed horizontal runs against P(l) = (2/3)(1/3)^l."""
    vertical = [
        ((chunk == 1).astype(np.int8) - (chunk == 2).astype(np.int8))
        for chunk in move_chunks(seed, steps, stream)
    ]
    runs = decompose(np.concatenate(vertical)).xi_tilde.astype(np.int64)
    if runs.size < 50:
        raise InsufficientDataError(f"only {runs.size} horizontal runs")
    params = SpectralParams()
    top = 0
    while runs.size * params.p * params.q ** (top + 1) >= 5:
        top += 1
    observed = np.bincount(np.minimum(runs, top), minlength=top + 1)
    expected = params.p * params.q ** np.arange(top + 1)
    expected[-1] = params.q**top
    result = stats.chisquare(observed, runs.size * expected)
    moments = default_moments(params)
    return GoodnessOfFit(
        float(result.statistic),
        float(result.pvalue),
        int(runs.size),
        float(runs.mean()),
        math.sqrt(moments.s2 / runs.size),
    )


def move_frequency_test(steps: int, seed: int, stream: int = 0) -> GoodnessOfFit:
    """Chi-square of the three move tags against 1/3 each."""
    counts = np.zeros(3, dtype=np.int64)
    for chunk in move_chunks(seed, steps, stream):
        counts += np.bincount(chunk, minlength=4)[1:]
    result = stats.chisquare(counts)
    share = counts[2] / max(steps, 1)
    return GoodnessOfFit(
        float(result.statistic),
        float(result.pvalue),
        steps,
        float(share),
        math.sqrt(2.0 / 9.0 / max(steps, 1)),
    )
