"""Invariant suites behind ``walkops verify``.

``exact`` holds identities that must never fail, ``analytic`` compares the
closed forms and integrals against each other, ``stat`` runs the Monte Carlo
cross-checks at full size (minutes of runtime).
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List

import numpy as np

from walkops.analytics import (
    SpectralParams,
    angle_alpha,
    char_L,
    chi,
    conditional_zero_prob,
    first_return_gf,
    g_H,
    g_H_printed,
    g_limit_table,
    green_cutoff_L,
    green_sum_H,
    green_sum_L,
    modulus_r,
    return_prob_L,
)
from walkops.config import RunSettings
from walkops.decomp import (
    VerticalIncrements,
    alternating_occupation_sum,
    decompose,
    epoch_indicators,
    extract_increments,
    reconstruct,
    skeleton_view,
)
from walkops.env import (
    alternate,
    balance_statistic,
    explicit,
    halfplane,
    random_iid,
    strip,
)
from walkops.estimators import (
    characteristic_mc,
    delta_scaling,
    fit_log_growth,
    fluctuation_diagnostics,
    h_identity_test,
    move_frequency_test,
    speed_estimate,
    visit_census,
    waiting_time_gof,
    zero_return_frequency,
)
from walkops.quadrature import QuadratureSpec
from walkops.streams import generator
from walkops.walk import Move, Trajectory, simulate

SUITES = ("exact", "analytic", "stat")
STREAM_VERIFY = 31

WORKED_MOVES = [
    Move.UP, Move.HORIZONTAL, Move.HORIZONTAL, Move.DOWN, Move.DOWN, Move.DOWN,
    Move.HORIZONTAL, Move.HORIZONTAL, Move.HORIZONTAL, Move.HORIZONTAL, Move.UP,
    Move.HORIZONTAL, Move.HORIZONTAL, Move.HORIZONTAL, Move.UP,
]  # fmt: skip
WORKED_SIGNS = {-2: -1, -1: 1, 0: -1, 1: 1}
FLUCTUATION_DELTAS = (0.25, 0.25, 0.3)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class VerifyContext:
    seed: int
    settings: RunSettings
    quadrature: QuadratureSpec
    params: SpectralParams


Check = Callable[[VerifyContext], CheckResult]
_REGISTRY: Dict[str, List[Check]] = {name: [] for name in SUITES}


def check(suite: str) -> Callable[[Check], Check]:
    def register(fn: Check) -> Check:
        _REGISTRY[suite].append(fn)
        return fn

    return register


def checks(suite: str) -> List[Check]:
    if suite == "all":
        return [fn for name in SUITES for fn in _REGISTRY[name]]
    return list(_REGISTRY[suite])


def run_suite(suite: str, ctx: VerifyContext) -> List[CheckResult]:
    results = []
    for fn in checks(suite):
        result = fn(ctx)
        logging.info("%s: %s (%s)", result.name, result.passed, result.detail)
        print(f"[{'pass' if result.passed else 'fail'}] {result.name}: {result.detail}")
        results.append(result)
    return results


def _within(value: float, target: float, err: float, sigmas: float = 3.0) -> bool:
    return abs(value - target) <= sigmas * err


# =========================
# exact
# =========================


@check("exact")
def decomposition_round_trip(ctx: VerifyContext) -> CheckResult:
    rng = generator(ctx.seed, STREAM_VERIFY, 1)
    failures = 0
    for _ in range(10_000):
        values = rng.integers(-1, 2, size=int(rng.integers(0, 1001)), dtype=np.int8)
        dec = decompose(values)
        back = reconstruct(dec).psi_tilde
        if not np.array_equal(back, values) or dec.total_length != values.size:
            failures += 1
    return CheckResult(
        "decomposition-round-trip", failures == 0, f"{failures} failures"
    )


@check("exact")
def worked_example(ctx: VerifyContext) -> CheckResult:
    env = explicit(WORKED_SIGNS)
    traj = Trajectory.from_moves(WORKED_MOVES, env)
    dec = decompose(extract_increments(traj))
    view = skeleton_view(dec, env)
    got = (
        tuple(int(v) for v in dec.psi),
        tuple(int(v) for v in dec.xi_tilde),
        int(view.X[view.sigma[1]]),
        int(view.X[view.sigma[2]]),
    )
    want = ((1, -1, -1, -1, 1, 1), (0, 2, 0, 0, 4, 3), 2, 1)
    return CheckResult("worked-example", got == want, f"got {got}")


@check("exact")
def alternating_occupation(ctx: VerifyContext) -> CheckResult:
    rng = generator(ctx.seed, STREAM_VERIFY, 2)
    env = alternate()
    failures = 0
    epochs = 0
    for _ in range(1_000):
        steps = 2 * rng.integers(0, 2, size=1_000, dtype=np.int8) - 1
        view = skeleton_view(decompose(VerticalIncrements(steps)), env)
        for n in range(view.sigma.shape[0]):
            epochs += 1
            balanced = alternating_occupation_sum(view, n) == 0
            if not balanced or view.Delta[view.sigma[n]] != 0:
                failures += 1
    detail = f"{failures} failures in {epochs} epochs"
    return CheckResult("alternating-occupation", failures == 0, detail)


@check("exact")
def embedding_identities(ctx: VerifyContext) -> CheckResult:
    failures = 0
    lattices = [alternate(), halfplane(), strip(3), random_iid(ctx.seed)]
    for k, env in enumerate(lattices):
        traj = simulate(env, 10_000, ctx.seed, stream=k)
        view = skeleton_view(decompose(extract_increments(traj)), env)
        times = view.T
        same_x = np.array_equal(traj.xs[times], view.X)
        if not (same_x and np.array_equal(traj.ys[times], view.Y)):
            failures += 1
        for n in range(1, view.length + 1, max(view.length // 50, 1)):
            occupation = view.occupation(n - 1)
            signed = sum(env.epsilon(y) * c for y, c in occupation.items())
            right, left = view.sign_counts(n)
            if (
                sum(occupation.values()) != n
                or signed != view.Delta[n]
                or right - left != signed
            ):
                failures += 1
    return CheckResult("embedding-identities", failures == 0, f"{failures} failures")


@check("exact")
def straddle_identity(ctx: VerifyContext) -> CheckResult:
    env = alternate()
    failures = 0
    for k in range(1_000):
        traj = simulate(env, 10_000, ctx.seed, stream=100 + k)
        counts, straddles = epoch_indicators(traj, env)
        if not np.array_equal(counts, straddles.astype(np.int64)):
            failures += 1
    return CheckResult("straddle-identity", failures == 0, f"{failures} failures")


@check("exact")
def balance_statistics(ctx: VerifyContext) -> CheckResult:
    got = (balance_statistic(alternate(), 10), balance_statistic(halfplane(), 10))
    ok = all(v * 10 == 1 for v in got)
    return CheckResult("balance-statistics", ok, f"got {got}")


# =========================
# analytic
# =========================


@check("analytic")
def closed_forms(ctx: VerifyContext) -> CheckResult:
    params = ctx.params
    thetas = np.linspace(-math.pi, math.pi, 1001)
    c = chi(params, thetas)
    r = modulus_r(params, thetas)
    a = angle_alpha(params, thetas)
    errors = {
        "modulus": float(np.max(np.abs(np.abs(c) - r))),
        "polar": float(np.max(np.abs(c - r * np.exp(1j * a)))),
        "even-r": float(np.max(np.abs(r - r[::-1]))),
        "odd-alpha": float(np.max(np.abs(a + a[::-1]))),
        "g0": float(abs(g_H(params, 0.0) - 1.0)),
        "r-pi": (
            float(abs(modulus_r(params, math.pi) - 0.5)) if params.p == 2 / 3 else 0.0
        ),
        "char-L": float(
            np.max(np.abs(char_L(params, thetas, 1) - first_return_gf(r)))
        ),
        "printed-g": float(
            np.max(np.abs(g_H_printed(params, thetas) - r * g_H(params, thetas)))
        ),
    }
    worst = max(errors.values())
    return CheckResult("closed-forms", worst < 1e-12, f"max abs error {worst:.2e}")


@check("analytic")
def g_limit(ctx: VerifyContext) -> CheckResult:
    rows, limit = g_limit_table(ctx.params, [1e-4, 1e-6, 1e-8])
    target = math.sqrt(ctx.params.mean_wait)
    rel = abs(limit - target) / target
    ok = rel < 0.01 and all(abs(v - target) / target < 0.01 for _, v in rows)
    return CheckResult("g-limit", ok, f"extrapolated {limit:.6f}, target {target:.6f}")


@check("analytic")
def recurrence_signature(ctx: VerifyContext) -> CheckResult:
    ns = [100, 1_000, 10_000]
    values = [green_sum_L(ctx.params, n, ctx.quadrature).value for n in ns]
    fit = fit_log_growth(ns, values)
    target = ctx.params.p / (math.pi * math.sqrt(ctx.params.q))
    ok = fit.r_squared > 0.99 and abs(fit.exponent - target) <= 0.05 * target
    cutoff = [green_cutoff_L(ctx.params, e, ctx.quadrature).value for e in (1e-6, 1e-8)]
    ok = ok and cutoff[1] - cutoff[0] > 0.9 * target * math.log(100)
    return CheckResult(
        "recurrence-signature",
        ok,
        f"slope {fit.exponent:.4f} (target {target:.4f}), R2 {fit.r_squared:.5f}, "
        f"cutoff growth {cutoff[1] - cutoff[0]:.3f}",
    )


@check("analytic")
def transience_signature(ctx: VerifyContext) -> CheckResult:
    coarse = green_sum_H(ctx.params, 1e-6, ctx.quadrature).value
    fine = green_sum_H(ctx.params, 1e-8, ctx.quadrature).value
    rel = abs(fine - coarse) / fine
    detail = f"{coarse:.6f} vs {fine:.6f} (rel {rel:.2e})"
    return CheckResult("transience-signature", rel < 0.01, detail)


@check("analytic")
def quenched_zero_probability(ctx: VerifyContext) -> CheckResult:
    p, q = ctx.params.p, ctx.params.q
    one = conditional_zero_prob(ctx.params, 1, 0, ctx.quadrature).value
    pair = conditional_zero_prob(ctx.params, 1, 1, ctx.quadrature).value
    ok = abs(one - p) < 1e-8 and abs(pair - p / (1 + q)) < 1e-8
    return CheckResult("quenched-zero-probability", ok, f"{one:.10f}, {pair:.10f}")


@check("analytic")
def tolerance_stability(ctx: VerifyContext) -> CheckResult:
    loose = return_prob_L(ctx.params, 2, ctx.quadrature).value
    tight = return_prob_L(ctx.params, 2, ctx.quadrature.tightened()).value
    bound = 10 * ctx.quadrature.rel_tol * abs(tight)
    diff = abs(loose - tight)
    return CheckResult("tolerance-stability", diff <= bound, f"diff {diff:.2e}")


# =========================
# stat
# =========================


@check("stat")
def visit_signatures(ctx: VerifyContext) -> CheckResult:
    budgets = [10_000, 100_000, 1_000_000]
    lat = visit_census(alternate(), budgets, 100, ctx.seed, ctx.settings)
    half = visit_census(halfplane(), budgets, 100, ctx.seed, ctx.settings)
    rand = visit_census(random_iid(ctx.seed), budgets, 100, ctx.seed, ctx.settings, 20)
    increasing = lat.means[0] < lat.means[1] < lat.means[2]
    plateau_h = half.means[2] - half.means[1] < 0.05
    plateau_o = rand.means[2] - rand.means[1] < 0.05
    expected = green_sum_H(ctx.params, 1e-8, ctx.quadrature).value
    agree = abs(half.means[2] - expected) <= 0.1 * expected + 3 * half.stderrs[2]
    return CheckResult(
        "visit-signatures",
        increasing and plateau_h and plateau_o and agree,
        f"L {lat.means}, H {half.means} (analytic {expected:.3f}), O {rand.means}",
    )


@check("stat")
def alternate_zero_return(ctx: VerifyContext) -> CheckResult:
    row = zero_return_frequency(
        alternate(), 2, 1_000_000, ctx.seed, ctx.settings, ctx.params
    )
    exact = return_prob_L(ctx.params, 2, ctx.quadrature).value
    return CheckResult(
        "alternate-zero-return",
        _within(row.estimate, exact, row.stderr),
        f"{row.estimate:.5f} +/- {row.stderr:.5f} vs {exact:.5f}",
    )


@check("stat")
def halfplane_characteristic(ctx: VerifyContext) -> CheckResult:
    theta = 0.5
    mean, re_err, im_err, _ = characteristic_mc(
        halfplane(), theta, 2, 1_000_000, ctx.seed, ctx.settings, ctx.params
    )
    exact = complex(g_H(ctx.params, theta) ** 2)
    ok = _within(mean.real, exact.real, re_err) and _within(
        mean.imag, exact.imag, im_err
    )
    return CheckResult("halfplane-characteristic", ok, f"{mean:.5f} vs {exact:.5f}")


@check("stat")
def random_fluctuations(ctx: VerifyContext) -> CheckResult:
    env = random_iid(ctx.seed)
    budgets = [1_000, 3_000, 10_000, 30_000, 100_000]
    scaling = delta_scaling(env, budgets, 200, ctx.seed, ctx.settings)
    speed = speed_estimate(env, 100_000, 100, ctx.seed, ctx.settings, 100, ctx.params)
    variance = speed_estimate(
        env, 1_000, 100_000, ctx.seed + 1, ctx.settings, 1_000, ctx.params
    )
    ok = (
        0.70 <= scaling.fit.exponent <= 0.80
        and speed.mean_abs_speed < 0.05
        and abs(variance.variance_ratio - 1.0) < 0.05
        and _within(variance.centered_mean, 0.0, variance.centered_mean_stderr)
    )
    return CheckResult(
        "random-fluctuations",
        ok,
        f"exponent {scaling.fit.exponent:.3f}, speed {speed.mean_abs_speed:.4f}, "
        f"variance ratio {variance.variance_ratio:.4f}",
    )


@check("stat")
def fluctuation_events(ctx: VerifyContext) -> CheckResult:
    env = random_iid(ctx.seed)
    summaries = [
        fluctuation_diagnostics(
            env, n, 4_000, FLUCTUATION_DELTAS, ctx.seed, ctx.settings
        )
        for n in (100, 1_000, 10_000)
    ]
    last = summaries[-1]
    freq_b = [s.freq_b for s in summaries]
    settled = last.freq_not_a1 == 0 and last.freq_not_a2 == 0
    ok = settled and freq_b[0] > freq_b[1] > freq_b[2]
    return CheckResult("fluctuation-events", ok, f"B frequencies {freq_b}")


@check("stat")
def halfplane_identity(ctx: VerifyContext) -> CheckResult:
    results = [h_identity_test(n, 10_000, ctx.seed, ctx.settings) for n in (1, 5)]
    ok = all(r.passed for r in results)
    detail = ", ".join(
        f"n={r.n}: KS {r.statistic:.4f} p {r.pvalue:.4f}" for r in results
    )
    return CheckResult("halfplane-identity", ok, detail)


@check("stat")
def run_length_law(ctx: VerifyContext) -> CheckResult:
    gof = waiting_time_gof(1_500_000, ctx.seed)
    target = ctx.params.mean_wait
    ok = gof.pvalue > 1e-3 and _within(gof.mean, target, gof.mean_stderr)
    detail = f"{gof.count} runs, mean {gof.mean:.4f}, p {gof.pvalue:.4f}"
    return CheckResult("run-length-law", ok, detail)


@check("stat")
def move_tag_frequencies(ctx: VerifyContext) -> CheckResult:
    gof = move_frequency_test(3_000_000, ctx.seed, stream=STREAM_VERIFY)
    ok = gof.pvalue > 1e-3 and _within(gof.mean, 1.0 / 3.0, gof.mean_stderr)
    detail = f"{gof.count} moves, horizontal {gof.mean:.5f}, p {gof.pvalue:.4f}"
    return CheckResult("move-tag-frequencies", ok, detail)
