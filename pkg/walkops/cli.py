"""Command-line runner for walkops experiments.

USAGE
-----
python -m walkops simulate --lattice alternate --steps 15 --seed 7 --out walk.csv
python -m walkops decompose --input walk.csv --lattice alternate
python -m walkops analyze --quantity g-limit
python -m walkops estimate --quantity visits --lattice halfplane --trials 100
python -m walkops verify --suite exact
python -m walkops --replay report.csv --threads 8 --out again.csv

Lattice specs: alternate, halfplane, strip:<width>, random:<seed>,
explicit:<json or file>, flip:<y1,y2,...>:<base spec>.

Exit status: 0 ok, 1 a verify check failed, 2 usage or configuration error,
3 numeric failure (quadrature did not converge, too little data for a fit).
"""

import argparse
import dataclasses
import logging
import math
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence, TextIO, Tuple

from dotenv import load_dotenv

from walkops import analytics
from walkops.analytics import SpectralParams
from walkops.config import RunSettings, load_config_file, resolve, resolve_settings
from walkops.decomp import decompose, extract_increments, skeleton_view
from walkops.env import (
    Kind,
    OrientationEnvironment,
    balance_statistic,
    parse_environment,
)
from walkops.errors import (
    ConfigError,
    DomainError,
    EnvironmentSpecError,
    InsufficientDataError,
    NotAvailableError,
    OrdinateRangeError,
    QuadratureError,
    WalkopsError,
)
from walkops.estimators import (
    EstimateRow,
    characteristic_mc,
    default_moments,
    delta_at_returns,
    delta_scaling,
    fluctuation_diagnostics,
    h_identity_test,
    speed_estimate,
    visit_census,
    waiting_time_gof,
    zero_return_frequency,
)
from walkops.quadrature import QuadratureSpec
from walkops.reports import (
    ANALYZE_COLUMNS,
    DECOMPOSITION_COLUMNS,
    ESTIMATE_COLUMNS,
    TRAJECTORY_COLUMNS,
    VERIFY_COLUMNS,
    ExperimentConfig,
    ExperimentReport,
    Stopwatch,
    decomposition_rows,
    read_config_echo,
    read_trajectory_csv,
    rows_of,
    trajectory_rows,
    write_report,
)
from walkops.verify import SUITES, VerifyContext, run_suite
from walkops.walk import simulate

DEFAULT_SEED = 20240601

ANALYZE_QUANTITIES = (
    "char-L",
    "g-H",
    "g-H-printed",
    "g-limit",
    "return-prob-L",
    "green-sum-L",
    "green-cutoff-L",
    "green-sum-H",
    "conditional-zero",
    "moments",
    "balance",
)

ANALYZE_ALIASES = {"green-L": "green-sum-L", "green-H": "green-sum-H"}

# quantity -> (default n grid, default trials)
ESTIMATE_DEFAULTS: Dict[str, Tuple[List[int], int]] = {
    "delta-scaling": ([1_000, 3_000, 10_000, 30_000, 100_000], 200),
    "speed": ([100_000], 100),
    "visits": ([10_000, 100_000, 1_000_000], 100),
    "fluctuations": ([100, 1_000, 10_000], 1_000),
    "h-identity": ([1, 5], 10_000),
    "zero-return": ([2], 100_000),
    "characteristic": ([2], 100_000),
    "delta-returns": ([10], 1_000),
    "run-lengths": ([1_500_000], 1),
}

# quenched by default: one environment per trial
PER_TRIAL_ENVIRONMENTS = {"delta-scaling", "fluctuations"}


def _int_list(text: str) -> List[int]:
    try:
        return [int(float(v)) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {e}")


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {e}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--lattice", default="alternate", help="lattice spec (default: alternate)"
    )
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", help="report path (default: stdout)")
    common.add_argument("--config", help="JSON config file with a 'walkops' section")
    common.add_argument("--log-level", help="logging level (default: WARNING)")
    common.add_argument("--threads", type=int, help="worker threads (default: 1)")
    common.add_argument("--block-size", type=int, help="trials per stream block")
    common.add_argument("--step-cap", type=int, help="skeleton steps before censoring")
    common.add_argument("--record-cap", type=int, help="largest recorded trajectory")
    common.add_argument("--p", type=float, help="geometric waiting parameter")
    common.add_argument(
        "--tol",
        "--rel-tol",
        dest="rel_tol",
        type=float,
        help="quadrature relative tolerance",
    )

    parser = argparse.ArgumentParser(
        prog="walkops", description="Random walks on horizontally oriented lattices"
    )
    parser.add_argument("--replay", help="rerun the config echoed in a report")
    parser.add_argument(
        "--threads", dest="replay_threads", type=int, help="threads for --replay"
    )
    parser.add_argument("--out", dest="replay_out", help="output for --replay")
    sub = parser.add_subparsers(dest="subcommand")

    sim = sub.add_parser("simulate", parents=[common], help="record one trajectory")
    sim.add_argument("--steps", type=int, required=True)

    dec = sub.add_parser(
        "decompose", parents=[common], help="skeleton and waiting times"
    )
    dec.add_argument("--input", help="trajectory CSV (default: simulate --steps)")
    dec.add_argument("--steps", type=int, default=15)

    ana = sub.add_parser("analyze", parents=[common], help="closed forms, integrals")
    ana.add_argument(
        "--quantity",
        choices=ANALYZE_QUANTITIES + tuple(ANALYZE_ALIASES),
        required=True,
    )
    ana.add_argument("--theta", type=_float_list, help="angles (default per quantity)")
    ana.add_argument("--n", type=_int_list, default=[1, 2, 10])
    ana.add_argument("--eps", type=_float_list, default=[1e-6, 1e-8])
    ana.add_argument("--n-plus", type=int, default=1)
    ana.add_argument("--n-minus", type=int, default=1)

    est = sub.add_parser("estimate", parents=[common], help="Monte Carlo estimators")
    est.add_argument("--quantity", choices=sorted(ESTIMATE_DEFAULTS), required=True)
    est.add_argument("--n", type=_int_list, help="grid of n (default per quantity)")
    est.add_argument("--trials", type=int, help="trials (default per quantity)")
    est.add_argument("--environments", type=int, default=None)
    est.add_argument("--resample-env", action="store_true", default=None)
    est.add_argument("--deltas", type=_float_list, default=[0.25, 0.25, 0.3])
    est.add_argument("--theta", type=float, default=0.5)
    est.add_argument("--alpha", type=float, default=1e-3)
    est.add_argument("--resamples", type=int, default=9_999)

    ver = sub.add_parser("verify", parents=[common], help="invariant suites")
    ver.add_argument("--suite", choices=SUITES + ("all",), default="exact")
    return parser


def build_config(
    args: argparse.Namespace, file_values: Dict[str, Any]
) -> ExperimentConfig:
    flags = {
        "threads": args.threads,
        "block_size": args.block_size,
        "step_cap": args.step_cap,
        "record_cap": args.record_cap,
        "resample_env": getattr(args, "resample_env", None),
    }
    settings = resolve_settings(flags, file_values)
    params: Dict[str, Any] = {
        "p": resolve("p", args.p, file_values),
        "rel_tol": resolve("rel_tol", args.rel_tol, file_values),
    }
    skip = {
        "subcommand", "lattice", "seed", "format", "out", "config", "log_level",
        "threads", "block_size", "step_cap", "record_cap", "p", "rel_tol",
        "replay", "replay_threads", "replay_out", "resample_env",
    }  # fmt: skip
    params.update({k: v for k, v in vars(args).items() if k not in skip})
    if args.subcommand == "estimate":
        grid, trials = ESTIMATE_DEFAULTS[args.quantity]
        params["n"] = params["n"] or grid
        params["trials"] = params["trials"] or trials
        if settings.resample_env:
            params["environments"] = params["trials"]
        elif params["environments"] is None:
            per_trial = args.quantity in PER_TRIAL_ENVIRONMENTS
            params["environments"] = params["trials"] if per_trial else 1
    if args.subcommand == "analyze":
        quantity = ANALYZE_ALIASES.get(args.quantity, args.quantity)
        params["quantity"] = quantity
        if params["theta"] is None:
            params["theta"] = [1e-4, 1e-6, 1e-8] if quantity == "g-limit" else [0.5]
    return ExperimentConfig(
        args.subcommand,
        args.lattice,
        args.seed,
        args.format,
        args.out,
        params,
        settings.as_dict(),
    )


# =========================
# Subcommands
# =========================


def _progress(config: ExperimentConfig) -> TextIO:
    """Progress lines stay off stdout while the report is written there."""
    return sys.stdout if config.out else sys.stderr


def _context(
    config: ExperimentConfig,
) -> Tuple[OrientationEnvironment, RunSettings, SpectralParams, QuadratureSpec]:
    settings = RunSettings(**config.settings)
    params = SpectralParams(p=float(config.params["p"]))
    quadrature = QuadratureSpec(
        rel_tol=float(config.params["rel_tol"]), workers=settings.threads
    )
    return parse_environment(config.lattice), settings, params, quadrature


def run_simulate(config: ExperimentConfig) -> ExperimentReport:
    env, settings, _, _ = _context(config)
    steps = int(config.params["steps"])
    traj = simulate(env, steps, config.seed, record_cap=settings.record_cap)
    return ExperimentReport(config, TRAJECTORY_COLUMNS, trajectory_rows(traj))


def run_decompose(config: ExperimentConfig) -> ExperimentReport:
    env, settings, _, _ = _context(config)
    source = config.params.get("input")
    if source:
        traj = read_trajectory_csv(source, env)
    else:
        steps = int(config.params["steps"])
        traj = simulate(env, steps, config.seed, record_cap=settings.record_cap)
    dec = decompose(extract_increments(traj))
    view = skeleton_view(dec, env)
    extra = {
        "alpha": dec.alpha,
        "tail": dec.tail,
        "sigma": [int(s) for s in view.sigma],
        "x_at_sigma": [int(view.X[s]) for s in view.sigma],
    }
    rows = decomposition_rows(dec)
    return ExperimentReport(config, DECOMPOSITION_COLUMNS, rows, extra)


def _complex_rows(label: str, value: complex) -> List[Tuple[Any, ...]]:
    return [(f"{label}/re", value.real, 0.0), (f"{label}/im", value.imag, 0.0)]


def run_analyze(config: ExperimentConfig) -> ExperimentReport:
    env, _, params, quadrature = _context(config)
    opts = config.params
    quantity = ANALYZE_ALIASES.get(opts["quantity"], opts["quantity"])
    rows: List[Tuple[Any, ...]] = []
    if quantity == "char-L":
        for t in opts["theta"]:
            for n in opts["n"]:
                value = float(analytics.char_L(params, t, n))
                rows.append((f"theta={t},n={n}", value, 0.0))
    elif quantity in ("g-H", "g-H-printed"):
        g = analytics.g_H if quantity == "g-H" else analytics.g_H_printed
        for t in opts["theta"]:
            rows.extend(_complex_rows(f"theta={t}", complex(g(params, t))))
    elif quantity == "g-limit":
        table, limit = analytics.g_limit_table(params, opts["theta"])
        target = math.sqrt(params.mean_wait)
        rows.extend((f"theta={t}", v, 0.0) for t, v in table)
        rows.append(("extrapolated", limit, abs(limit - table[-1][1])))
        rows.append(("target", target, 0.0))
        log = _progress(config)
        for t, v in table:
            print(f"[g-limit] theta={t:g}: (1-g)/sqrt(theta) = {v:.6f}", file=log)
        print(f"[g-limit] extrapolated {limit:.6f}, target {target:.6f}", file=log)
    elif quantity in ("return-prob-L", "green-sum-L"):
        by_n = analytics.return_prob_L
        if quantity == "green-sum-L":
            by_n = analytics.green_sum_L
        for n in opts["n"]:
            res = by_n(params, n, quadrature)
            rows.append((f"n={n}", res.value, res.abs_err))
    elif quantity in ("green-cutoff-L", "green-sum-H"):
        by_eps = analytics.green_sum_H
        if quantity == "green-cutoff-L":
            by_eps = analytics.green_cutoff_L
        for eps in opts["eps"]:
            res = by_eps(params, eps, quadrature)
            rows.append((f"eps={eps}", res.value, res.abs_err))
    elif quantity == "conditional-zero":
        n_plus, n_minus = opts["n_plus"], opts["n_minus"]
        res = analytics.conditional_zero_prob(params, n_plus, n_minus, quadrature)
        rows.append((f"n_plus={n_plus},n_minus={n_minus}", res.value, res.abs_err))
    elif quantity == "moments":
        m = default_moments(params)
        rows.extend([("m1", m.m1, 0.0), ("m2", m.m2, 0.0), ("s2", m.s2, 0.0)])
    else:
        for n in opts["n"]:
            rows.append((f"N={n}", float(balance_statistic(env, n)), 0.0))
    return ExperimentReport(config, ANALYZE_COLUMNS, rows)


def _exact_characteristic(
    env: OrientationEnvironment, params: SpectralParams, theta: float, n: int
) -> Optional[complex]:
    if env.kind is Kind.ALTERNATE:
        return complex(float(analytics.char_L(params, theta, n)), 0.0)
    if env.kind is Kind.HALFPLANE:
        return complex(analytics.g_H(params, theta)) ** n
    return None


def run_estimate(config: ExperimentConfig) -> ExperimentReport:
    env, settings, params, quadrature = _context(config)
    opts = config.params
    quantity = opts["quantity"]
    grid: List[int] = list(opts["n"])
    trials = int(opts["trials"])
    environments = int(opts["environments"])
    seed = config.seed
    records: List[EstimateRow] = []
    if quantity == "delta-scaling":
        scaling = delta_scaling(env, grid, trials, seed, settings, environments)
        records.extend(scaling.rows)
    elif quantity == "speed":
        for n in grid:
            speed = speed_estimate(
                env, n, trials, seed, settings, environments, params
            )
            records.extend(speed.rows())
    elif quantity == "visits":
        census = visit_census(env, grid, trials, seed, settings, environments)
        records.extend(census.rows())
    elif quantity == "fluctuations":
        d1, d2, d3 = opts["deltas"]
        for n in grid:
            summary = fluctuation_diagnostics(
                env, n, trials, (d1, d2, d3), seed, settings, environments
            )
            records.extend(summary.rows())
    elif quantity == "h-identity":
        if env.kind is not Kind.HALFPLANE:
            logging.warning("h-identity always runs on the half-plane lattice")
        for n in grid:
            test = h_identity_test(
                n, trials, seed, settings, opts["alpha"], opts["resamples"]
            )
            records.extend(test.rows())
    elif quantity == "zero-return":
        for n in grid:
            records.append(
                zero_return_frequency(env, n, trials, seed, settings, params)
            )
            if env.kind is Kind.ALTERNATE:
                exact = analytics.return_prob_L(params, n, quadrature)
                records.append(
                    EstimateRow("zero-return-analytic", n, exact.value, exact.abs_err)
                )
    elif quantity == "characteristic":
        theta = float(opts["theta"])
        for n in grid:
            mean, re_err, im_err, censored = characteristic_mc(
                env, theta, n, trials, seed, settings, params
            )
            records.append(EstimateRow("char-re", n, mean.real, re_err, censored))
            records.append(EstimateRow("char-im", n, mean.imag, im_err, censored))
            exact = _exact_characteristic(env, params, theta, n)
            if exact is not None:
                records.append(EstimateRow("char-analytic-re", n, exact.real, 0.0))
                records.append(EstimateRow("char-analytic-im", n, exact.imag, 0.0))
    elif quantity == "delta-returns":
        for n in grid:
            records.append(delta_at_returns(env, n, trials, seed, settings))
    else:
        for steps in grid:
            gof = waiting_time_gof(steps, seed)
            records.append(
                EstimateRow("run-length-mean", gof.count, gof.mean, gof.mean_stderr)
            )
            records.append(EstimateRow("run-length-pvalue", gof.count, gof.pvalue, 0.0))
    return ExperimentReport(config, ESTIMATE_COLUMNS, rows_of(records))


def run_verify(config: ExperimentConfig) -> ExperimentReport:
    _, settings, params, quadrature = _context(config)
    ctx = VerifyContext(config.seed, settings, quadrature, params)
    results = run_suite(str(config.params["suite"]), ctx)
    rows = [(r.name, r.passed, r.detail) for r in results]
    failures = sum(not r.passed for r in results)
    return ExperimentReport(config, VERIFY_COLUMNS, rows, {"failures": failures})


COMMANDS: Dict[str, Callable[[ExperimentConfig], ExperimentReport]] = {
    "simulate": run_simulate,
    "decompose": run_decompose,
    "analyze": run_analyze,
    "estimate": run_estimate,
    "verify": run_verify,
}


def execute(config: ExperimentConfig) -> Tuple[ExperimentReport, int]:
    watch = Stopwatch()
    log = _progress(config)
    print(
        f"[run] {config.subcommand} lattice={config.lattice} seed={config.seed}",
        file=log,
    )
    report = watch.stamp(COMMANDS[config.subcommand](config))
    text = write_report(report, config.out)
    if config.out:
        print(f"[write] {config.out}", file=log)
    else:
        sys.stdout.write(text)
    failures = int(report.extra.get("failures", 0))
    print(
        f"Done. rows={len(report.rows)}, failures={failures}, "
        f"duration={report.duration_s:.3f}s",
        file=log,
    )
    return report, 1 if failures else 0


def _configure_logging(level: Optional[str]) -> None:
    name = (level or "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, name, logging.WARNING),
        format="%(levelname)s %(message)s",
    )


def run(argv: Sequence[str]) -> int:
    load_dotenv()
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as e:
        return int(e.code or 0)
    try:
        if args.replay:
            _configure_logging(resolve("log_level", None, {}))
            config = read_config_echo(args.replay)
            overrides: Dict[str, Any] = {}
            if args.replay_threads is not None:
                threads = args.replay_threads
                overrides["settings"] = {**config.settings, "threads": threads}
            if args.replay_out is not None:
                overrides["out"] = args.replay_out
            config = dataclasses.replace(config, **overrides)
        elif args.replay_threads is not None or args.replay_out is not None:
            parser.print_usage()
            print("ERROR: --threads/--out before a subcommand need --replay.")
            return 2
        elif args.subcommand is None:
            parser.print_usage()
            print("ERROR: a subcommand or --replay is required.")
            return 2
        else:
            file_values = load_config_file(args.config)
            _configure_logging(resolve("log_level", args.log_level, file_values))
            config = build_config(args, file_values)
        _, status = execute(config)
        return status
    except (
        ConfigError,
        EnvironmentSpecError,
        DomainError,
        NotAvailableError,
        OrdinateRangeError,
    ) as e:
        print(f"ERROR: {e}")
        return 2
    except (QuadratureError, InsufficientDataError) as e:
        print(f"ERROR: {e}")
        diagnostics = getattr(e, "diagnostics", None)
        if diagnostics:
            print(f"diagnostics: {diagnostics}")
        return 3
    except WalkopsError as e:
        print(f"ERROR: {e}")
        return 3
    except OSError as e:
        print(f"ERROR: {e}")
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
