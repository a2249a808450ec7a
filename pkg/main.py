import argparse
import json
import logging
import sys
import time
import uuid
from datetime import datetime

import numpy as np

import aws_utils
import config
import interactive
import metrics
import simulation
import storage
import streams
import testbed
from adaptive import build_estimates, concentration_check, model_collection, select
from blocks import allocate_budget, dyadic_partition
from entities import SobolevParams
from estimator import aggregate
from mechanisms import MECHANISMS
from mechanisms.audit import corrupted_overrides, verify_ldp

logger = logging.getLogger("main")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INVALID = 2


def _floats(text):
    values = [float(x.strip()) for x in str(text).split(',') if x.strip()]
    return values[0] if len(values) == 1 else values


def _ints(text):
    return [int(x.strip()) for x in str(text).split(',') if x.strip()]


def _smoothness(value, d, radius=1.0):
    values = value if isinstance(value, list) else [value] * d
    if len(values) != d:
        raise ValueError(f"smoothness {value} does not have d={d} entries")
    return SobolevParams(tuple(values), radius)


def load_points(path):
    """Points in [0,1]^d from .npy or delimited text (one point per row)."""
    if str(path).endswith(".npy"):
        points = np.load(path)
    else:
        points = np.loadtxt(path, delimiter=",", ndmin=2)
    points = np.asarray(points, dtype=float)
    return points.reshape(-1, 1) if points.ndim == 1 else points


# --- subcommands ---

def cmd_privatize(args):
    points = load_points(args.input)
    d = points.shape[1]
    delta = _smoothness(args.delta, d)
    mech_cls = MECHANISMS[args.mechanism]
    mech = mech_cls.build(args.J, d, args.alpha, delta)
    data = mech.privatize_dataset(points, args.seed, chunk_size=args.chunk_size)
    print(mech.schedule.summary())
    storage.write_dataset(args.output, data)
    print(f"\nPrivatized {data.n} records -> {args.output}")
    return EXIT_OK


def cmd_estimate(args):
    data = storage.read_dataset(args.input)
    estimate = aggregate(data)
    print(f"Estimated {len(estimate.coefficients)} coefficients from {estimate.n} private views "
          f"(schedule {estimate.schedule.hash()[:12]})")
    if args.output:
        storage.write_estimate(args.output, estimate)
    return EXIT_OK


def cmd_adapt(args):
    points = load_points(args.input)
    d = points.shape[1]
    delta = _smoothness(args.delta, d)
    collection = model_collection(points.shape[0], args.alpha, max_J=args.max_J)
    estimates = build_estimates(points, collection, args.alpha, delta, args.seed, chunk_size=args.chunk_size)
    selection = select(estimates, args.kappa1, args.kappa2, args.A)
    print(selection.summary())
    if args.output:
        storage.write_json(args.output, {"type": "selection", **selection.to_json()})
    return EXIT_OK


def _simulation_params(args):
    params = config.load_config(args.config) if args.config else config.get_default_params()
    if args.interactive:
        params = interactive.get_simulation_parameters(params)
    overrides = {
        "D": args.d,
        "BETA": _floats(args.beta) if args.beta is not None else None,
        "DELTA": _floats(args.delta) if args.delta is not None else None,
        "RADIUS": args.radius,
        "A": args.A,
        "ALPHA": args.alpha,
        "N_GRID": _ints(args.n_grid) if args.n_grid else None,
        "REPLICATIONS": args.replications,
        "MECHANISM": getattr(args, "mechanism", None),
        "SELECTOR": getattr(args, "selector", None),
        "TRUTH_J_MAX": args.truth_j_max,
        "WORKERS": args.workers,
        "CHUNK_SIZE": args.chunk_size,
        "SEED": args.seed,
        "OUTPUT": args.output,
    }
    for key, value in overrides.items():
        if value is not None:
            params[key] = value
    if args.truth_kind or args.nu or args.truth_J:
        truth = dict(params["TRUTH"])
        truth["kind"] = args.truth_kind or truth.get("kind")
        truth["nu"] = args.nu or truth.get("nu")
        truth["J"] = args.truth_J or truth.get("J")
        params["TRUTH"] = truth
    return params


def handle_aws_operations(args, run_id, summary):
    """Optional DynamoDB logging; failures are reported, never fatal."""
    if not args.aws_enabled:
        return
    print("\n--- Logging results to AWS ---")
    try:
        region = aws_utils.connect_run_store(args.aws_profile, args.aws_region)
        print(f"Run store region: {region}")
        print(f"Ensuring DynamoDB table exists: {args.dynamo_table}...")
        aws_utils.ensure_dynamodb_table(args.dynamo_table)
        count = aws_utils.log_run_to_dynamodb(args.dynamo_table, run_id, summary)
        print(f"DynamoDB logging complete ({count} items).")
    except Exception as e:
        print("--- AWS Logging Failed ---")
        print(f"Error: {e}")
        print("Please check your AWS credentials, IAM permissions, and resource names.")


def cmd_simulate(args):
    spec = simulation.ExperimentSpec.from_params(_simulation_params(args))
    run_id = f"ldp-run-{datetime.now().strftime('%Y-%m-%d-%H%M%S')}-{uuid.uuid4().hex[:6]}"
    print(f"\nStarting experiment with RunID: {run_id} (seed {spec.root_seed})")
    start = time.time()
    result = simulation.run(spec)
    print(f"\n--- EXPERIMENT COMPLETE ({time.time() - start:.2f} seconds) ---")
    metrics.print_grid_summary(f"{spec.mechanism.upper()} MECHANISM, {spec.selector.upper()} J", result.points)
    if len(result.points) >= metrics.MIN_FIT_POINTS:
        metrics.print_rate_fit("RATE FIT", simulation.fit_rate(result))
    summary = result.to_json()
    if spec.output:
        json_path, csv_path = storage.run_paths(spec.output)
        storage.write_json(json_path, summary)
        storage.write_records_csv(csv_path, result.csv_rows(), result.csv_fields())
        print(f"\nSummary: {json_path}\nRecords: {csv_path}")
    handle_aws_operations(args, run_id, summary)
    return EXIT_OK


def cmd_fit(args):
    result = simulation.RunResult.from_json(storage.read_json(args.input))
    fit = simulation.fit_rate(result, drop_transient=not args.keep_all)
    metrics.print_rate_fit("RATE FIT", fit)
    if args.output:
        storage.write_json(args.output, {"type": "rate_fit", **fit.to_json()})
    if args.tolerance is not None and not fit.within(args.tolerance):
        print(f"\nFAIL: |slope - theoretical| = {fit.deviation:.4f} > {args.tolerance}")
        return EXIT_FAILED
    return EXIT_OK


def cmd_verify_ldp(args):
    delta = _smoothness(args.delta, args.d)
    mech = MECHANISMS[args.mechanism].build(args.J, args.d, args.alpha, delta)
    rng = streams.derive_stream(args.seed, streams.SAMPLE)
    points = rng.random((args.points, args.d))
    overrides = corrupted_overrides(mech.schedule, args.corrupt) if args.corrupt else None
    report = verify_ldp(mech.schedule, points, overrides)
    print("=" * 70)
    print(f"--- LDP AUDIT ({args.mechanism}, J={args.J}, d={args.d}, alpha={args.alpha:g}"
          f"{', corrupted x%g' % args.corrupt if args.corrupt else ''}) ---")
    print("=" * 70)
    print(f"{'Block':<16} | {'Size':>6} | {'Budget':>12} | {'Max log-ratio':>14} | result")
    print("-" * 70)
    for b in report.blocks:
        print(f"{str(b.label):<16} | {b.size:>6} | {b.budget:>12.6g} | {b.max_log_ratio:>14.6g} | "
              f"{'pass' if b.passed else 'FAIL'}")
    print("-" * 70)
    print(f"Total budget {report.total_budget:.6g} vs alpha {report.alpha:g}: {'PASS' if report.passed else 'FAIL'}")
    if args.output:
        storage.write_json(args.output, {"type": "ldp_report", **report.to_json()})
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_compare(args):
    spec = simulation.ExperimentSpec.from_params(_simulation_params(args))
    report = simulation.compare_mechanisms(spec)
    metrics.print_comparison(report)
    if spec.output:
        storage.write_json(f"{spec.output}.json", report.to_json())
    if args.check is None:
        return EXIT_OK
    ok = (report.block_fit.within(args.tolerance) and report.global_fit.within(args.tolerance)
          and report.separated_from(args.check))
    print(f"\nCheck (slopes within {args.tolerance}, separation for n >= {args.check}): {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAILED


def cmd_concentration(args):
    beta = SobolevParams.isotropic(args.beta, args.d, args.radius)
    delta = SobolevParams.isotropic(args.delta, args.d)
    truth = testbed.build_truth("bump", beta, J=args.truth_J, pattern=args.nu, root_seed=args.seed)
    schedule = allocate_budget(dyadic_partition(args.J, args.d), args.alpha, delta)
    report = concentration_check(schedule, args.n, args.alpha, truth, args.replications,
                                 root_seed=args.seed, A=args.A, chunk_size=args.chunk_size)
    print(report.summary())
    if args.output:
        storage.write_json(args.output, {
            "type": "concentration", "J": report.J, "n": report.n, "alpha": report.alpha, "V": report.V,
            "replications": report.replications, "passed": report.passed,
            "rows": [{"t": r.t, "frequency": r.frequency, "bound": r.bound, "se": r.se} for r in report.rows],
        })
    return EXIT_OK if report.passed else EXIT_FAILED


# --- parser ---

def _add_experiment_flags(p, with_selector=True):
    p.add_argument('--config', default=None, help="JSON config file (keys as in config.get_default_params)")
    p.add_argument('--seed', type=int, required=True, help="Root seed (mandatory)")
    p.add_argument('--output', default=None, help="Output prefix for <prefix>.json / <prefix>.csv")
    p.add_argument('--d', type=int, default=None, help="Dimension")
    p.add_argument('--beta', default=None, help="Smoothness, one value or comma-sep per axis")
    p.add_argument('--delta', default=None, help="Discriminator smoothness, one value or comma-sep per axis")
    p.add_argument('--radius', type=float, default=None, help="Sobolev radius R")
    p.add_argument('--A', type=float, default=None, help="Upper bound A on alpha")
    p.add_argument('--alpha', type=float, default=None, help="Privacy level")
    p.add_argument('--n-grid', default=None, help="Comma-separated sample sizes")
    p.add_argument('--replications', type=int, default=None)
    p.add_argument('--truth-kind', choices=config.TRUTH_KINDS, default=None)
    p.add_argument('--truth-J', type=int, default=None, help="Bump grid resolution of the truth")
    p.add_argument('--nu', choices=testbed.NU_PATTERNS, default=None, help="Bump cell pattern")
    p.add_argument('--truth-j-max', type=int, default=None, help="Bound of the true coefficient table")
    p.add_argument('--workers', type=int, default=None)
    p.add_argument('--chunk-size', type=int, default=None)
    p.add_argument('--interactive', action='store_true', help="Prompt for parameters before running")
    if with_selector:
        p.add_argument('--mechanism', choices=config.MECHANISM_NAMES, default=None)
        p.add_argument('--selector', choices=config.SELECTOR_NAMES, default=None)


def build_parser():
    parser = argparse.ArgumentParser(description="Locally private density estimation under Sobolev losses")
    parser.add_argument('--verbose', '-v', action='store_true', help="Debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser('privatize', help="Points in, private views out (JSON lines)")
    p.add_argument('--input', required=True)
    p.add_argument('--output', required=True)
    p.add_argument('--J', type=int, required=True)
    p.add_argument('--alpha', type=float, required=True)
    p.add_argument('--delta', type=_floats, default=config.DEFAULT_DELTA)
    p.add_argument('--mechanism', choices=config.MECHANISM_NAMES, default=config.DEFAULT_MECHANISM)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--chunk-size', type=int, default=config.DEFAULT_CHUNK_SIZE)
    p.set_defaults(func=cmd_privatize)

    p = sub.add_parser('estimate', help="Private views in, coefficient table out")
    p.add_argument('--input', required=True)
    p.add_argument('--output', default=None)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser('adapt', help="Multi-pass privatization and data-driven choice of J")
    p.add_argument('--input', required=True)
    p.add_argument('--output', default=None)
    p.add_argument('--alpha', type=float, required=True)
    p.add_argument('--delta', type=_floats, default=config.DEFAULT_DELTA)
    p.add_argument('--kappa1', type=float, default=config.DEFAULT_KAPPA1)
    p.add_argument('--kappa2', type=float, default=config.DEFAULT_KAPPA2)
    p.add_argument('--A', type=float, default=config.DEFAULT_A)
    p.add_argument('--max-J', type=int, default=None, help="Drop candidates above this J")
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--chunk-size', type=int, default=config.DEFAULT_CHUNK_SIZE)
    p.set_defaults(func=cmd_adapt)

    p = sub.add_parser('simulate', help="Full Monte Carlo experiment")
    _add_experiment_flags(p)
    p.add_argument('--aws-enabled', action='store_true', help="Log the run summary to DynamoDB")
    p.add_argument('--aws-profile', default=None)
    p.add_argument('--aws-region', default=None)
    p.add_argument('--dynamo-table', default='LdpDensityRuns')
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser('fit', help="Rate fit of a run summary")
    p.add_argument('--input', required=True, help="Run summary JSON written by simulate")
    p.add_argument('--output', default=None)
    p.add_argument('--tolerance', type=float, default=None, help="Exit 1 when |slope - theory| exceeds this")
    p.add_argument('--keep-all', action='store_true', help="Never drop a transient grid point")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser('verify-ldp', help="Exact privacy audit by channel enumeration")
    p.add_argument('--J', type=int, required=True)
    p.add_argument('--d', type=int, default=1)
    p.add_argument('--alpha', type=float, required=True)
    p.add_argument('--delta', type=_floats, default=config.DEFAULT_DELTA)
    p.add_argument('--mechanism', choices=config.MECHANISM_NAMES, default=config.DEFAULT_MECHANISM)
    p.add_argument('--points', type=int, default=50, help="Random inputs besides the cube vertices")
    p.add_argument('--corrupt', type=float, default=None, help="Negative control: scale a in pi by this factor")
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--output', default=None)
    p.set_defaults(func=cmd_verify_ldp)

    p = sub.add_parser('compare-mechanisms', help="Block vs global mechanism on the same data")
    _add_experiment_flags(p, with_selector=False)
    p.add_argument('--check', type=int, default=None, metavar="N_MIN",
                   help="Exit 1 unless slopes match and global is worse at 2 SE for n >= N_MIN")
    p.add_argument('--tolerance', type=float, default=0.08)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser('concentration', help="Empirical tail of d(f-hat_J, f_J) against its bound")
    p.add_argument('--J', type=int, required=True)
    p.add_argument('--n', type=int, required=True)
    p.add_argument('--d', type=int, default=1)
    p.add_argument('--alpha', type=float, default=config.DEFAULT_ALPHA)
    p.add_argument('--beta', type=int, default=int(config.DEFAULT_BETA))
    p.add_argument('--delta', type=float, default=config.DEFAULT_DELTA)
    p.add_argument('--radius', type=float, default=config.DEFAULT_RADIUS)
    p.add_argument('--A', type=float, default=config.DEFAULT_A)
    p.add_argument('--truth-J', type=int, default=2)
    p.add_argument('--nu', choices=testbed.NU_PATTERNS, default="dense")
    p.add_argument('--replications', type=int, default=2000)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--chunk-size', type=int, default=config.DEFAULT_CHUNK_SIZE)
    p.add_argument('--output', default=None)
    p.set_defaults(func=cmd_concentration)
    return parser


def main(argv=None):
    """
    Entry point. Exit codes: 0 success, 1 a verification or acceptance
    check failed, 2 invalid configuration or input.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INVALID if e.code else EXIT_OK
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ValueError, KeyError, json.JSONDecodeError, OSError) as e:
        logger.error("%s", e)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
