"""Command-line interface.

Commands: ``simulate`` (write a synthetic dataset), ``intervals`` (build
prediction intervals from calibration and test CSVs), ``evaluate`` (score
an interval file against true outcomes), ``report`` (run a replicated
study end to end).

Every command is deterministic given its flags; outputs embed the resolved
configuration as a leading comment line. Exit codes: 0 success, 2
configuration error, 3 data error, 4 numerical error.
"""

import argparse
import math
import sys

import numpy as np

from . import io
from .errors import (
    BinConformalError,
    ConfigurationError,
    DataError,
    NumericalError,
)
from .evaluation import (
    AGGREGATE,
    QUARTILES,
    coverage,
    lognormal_study,
    run_replications,
    zicount_study,
)
from .intervals import bins_from_cutpoints, bins_from_percentiles
from .models import OutcomeTransform
from .pipelines import METHOD_KINDS, make_intervals
from .simulation import STREAM_METHOD, lognormal_dgp, split, zero_inflated_count_dgp

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def _parse_proportions(text: str) -> tuple:
    parts = text.split(",")
    if len(parts) != 3:
        raise ConfigurationError(
            f"--proportions needs three comma-separated numbers, got {text!r}"
        )
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigurationError(f"cannot parse proportions {text!r}") from None


def _parse_bins_spec(text: str):
    """'percentiles:k' or comma-separated cutpoints."""
    if text.startswith("percentiles:"):
        try:
            k = int(text.split(":", 1)[1])
        except ValueError:
            raise ConfigurationError(f"cannot parse bin spec {text!r}") from None
        return ("percentiles", k)
    try:
        cutpoints = tuple(float(c) for c in text.split(","))
    except ValueError:
        raise ConfigurationError(f"cannot parse bin spec {text!r}") from None
    return ("cutpoints", cutpoints)


def _parse_alpha(value: float) -> float:
    if not 0.0 < value < 1.0:
        raise ConfigurationError(f"--alpha must be strictly inside (0, 1), got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="binconformal",
        description="Prediction intervals with standard and bin-conditional "
                    "conformal prediction plus baseline methods.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="write a synthetic dataset CSV")
    p_sim.add_argument("--dgp", choices=("lognormal", "zicount"), required=True)
    p_sim.add_argument("--n", type=int, required=True)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--zero-prob", type=float, default=0.867)
    p_sim.add_argument("--proportions", default=None,
                       help="train,calibration,test fractions (default per DGP)")
    p_sim.add_argument("--out", required=True)

    p_int = sub.add_parser("intervals", help="build prediction intervals from CSVs")
    p_int.add_argument("--method", choices=METHOD_KINDS, required=True)
    p_int.add_argument("--calibration", required=True,
                       help="CSV with header row_id,y_true,y_pred")
    p_int.add_argument("--test", required=True,
                       help="CSV with header row_id,y_pred[,y_true]")
    p_int.add_argument("--out", required=True)
    p_int.add_argument("--alpha", type=float, default=0.1)
    p_int.add_argument("--bins", default=None,
                       help="'percentiles:k' or comma-separated cutpoints "
                            "(required for bccp-* methods)")
    p_int.add_argument("--transform", choices=("identity", "log", "log1p"),
                       default="identity")
    p_int.add_argument("--seed", type=int, default=0)
    p_int.add_argument("--bootstrap-b", type=int, default=2000)
    p_int.add_argument("--round-counts", action="store_true")
    p_int.add_argument("--allow-empty-bins", action="store_true")
    p_int.add_argument("--grid-resolution", type=int, default=4001,
                       help="grid size for the brute-force construction "
                            "(recorded for provenance)")

    p_eval = sub.add_parser("evaluate", help="score an interval CSV against truth")
    p_eval.add_argument("--intervals", required=True)
    p_eval.add_argument("--truth", required=True,
                        help="CSV carrying row_id and y_true columns")
    p_eval.add_argument("--out", required=True, help="coverage report CSV")
    p_eval.add_argument("--widths-out", default=None,
                        help="optional per-row width CSV")
    p_eval.add_argument("--group", choices=("none", "quartiles", "bins"),
                        default="none")
    p_eval.add_argument("--bins", default=None,
                        help="bin spec when --group bins")
    p_eval.add_argument("--method-name", default="intervals",
                        help="method label for the report rows")

    p_rep = sub.add_parser("report", help="run a replicated study end to end")
    p_rep.add_argument("--study", choices=("lognormal", "zicount"), required=True)
    p_rep.add_argument("--replications", type=int, default=None)
    p_rep.add_argument("--seed", type=int, default=None)
    p_rep.add_argument("--n", type=int, default=None)
    p_rep.add_argument("--alpha", type=float, default=None)
    p_rep.add_argument("--zero-prob", type=float, default=None)
    p_rep.add_argument("--bootstrap-b", type=int, default=None)
    p_rep.add_argument("--methods", default=None,
                       help="comma-separated method names to keep")
    p_rep.add_argument("--out", required=True)
    return parser


def cmd_simulate(args) -> int:
    if args.n < 1:
        raise ConfigurationError(f"--n must be positive, got {args.n}")
    if args.dgp == "lognormal":
        dataset = lognormal_dgp(args.n, seed=args.seed)
        proportions = (0.5, 0.25, 0.25)
    else:
        dataset = zero_inflated_count_dgp(
            args.n, zero_prob=args.zero_prob, seed=args.seed
        )
        proportions = (0.7, 0.2, 0.1)
    if args.proportions is not None:
        proportions = _parse_proportions(args.proportions)
    dataset = split(dataset, proportions, seed=args.seed)
    config = {
        "command": "simulate", "dgp": args.dgp, "n": args.n, "seed": args.seed,
        "zero_prob": args.zero_prob, "proportions": list(proportions),
    }
    io.write_dataset_csv(args.out, dataset, config)
    return EXIT_OK


def _resolve_cli_bins(spec_text, y_true_cal, transform):
    if spec_text is None:
        return None
    kind, value = _parse_bins_spec(spec_text)
    support_min = transform.support_min
    if kind == "percentiles":
        return bins_from_percentiles(y_true_cal, value, support_min=support_min)
    return bins_from_cutpoints(value, support_min)


def cmd_intervals(args) -> int:
    alpha = _parse_alpha(args.alpha)
    if args.grid_resolution < 2:
        raise ConfigurationError(
            f"--grid-resolution must be at least 2, got {args.grid_resolution}"
        )
    transform = OutcomeTransform(args.transform)
    _, y_true_cal, y_pred_cal = io.read_calibration_csv(args.calibration)
    test_ids, y_pred_test, _ = io.read_test_csv(args.test)
    if args.method in ("bccp-d", "bccp-c") and args.bins is None:
        raise ConfigurationError(f"--method {args.method} requires --bins")
    if args.method not in ("bccp-d", "bccp-c") and args.bins is not None:
        raise ConfigurationError("--bins only applies to the bccp-* methods")
    bins = _resolve_cli_bins(args.bins, np.asarray(y_true_cal), transform)
    result = make_intervals(
        args.method,
        y_true_cal, y_pred_cal, y_pred_test,
        alpha=alpha,
        transform=transform,
        bins=bins,
        round_counts=args.round_counts,
        allow_empty_bins=args.allow_empty_bins,
        n_draws=args.bootstrap_b,
        rng=(args.seed, STREAM_METHOD, 0),
    )
    for note in result.notes:
        print(f"note: {note}", file=sys.stderr)
    config = {
        "command": "intervals", "method": args.method, "alpha": alpha,
        "bins": args.bins, "transform": args.transform, "seed": args.seed,
        "bootstrap_b": args.bootstrap_b, "round_counts": args.round_counts,
        "allow_empty_bins": args.allow_empty_bins,
        "grid_resolution": args.grid_resolution,
    }
    io.write_intervals_csv(args.out, test_ids, result.sets, result.flags, config)
    return EXIT_OK


def _read_truth(path) -> dict:
    rows = io._read_rows(path, ("row_id", "y_true"))
    if not rows:
        raise DataError(f"{path}: no truth records")
    return {r["row_id"]: io.parse_real(r["y_true"], "y_true") for r in rows}


def cmd_evaluate(args) -> int:
    order, sets_by_id, _ = io.read_intervals_csv(args.intervals)
    truth = _read_truth(args.truth)
    missing = [rid for rid in order if rid not in truth]
    if missing:
        raise DataError(
            f"row_id mismatch: {len(missing)} interval rows have no truth "
            f"record (first: {missing[0]!r})"
        )
    y_true = np.array([truth[rid] for rid in order])
    sets = [sets_by_id[rid] for rid in order]

    if args.group == "none":
        grouping = None
    elif args.group == "quartiles":
        grouping = QUARTILES
    else:
        if args.bins is None:
            raise ConfigurationError("--group bins requires --bins")
        kind, value = _parse_bins_spec(args.bins)
        if kind == "percentiles":
            grouping = bins_from_percentiles(y_true, value)
        else:
            grouping = bins_from_cutpoints(value, -math.inf)

    tallies = coverage(sets, y_true, grouping)
    rows = []
    for group in (AGGREGATE, *[g for g in tallies if g != AGGREGATE]):
        t = tallies[group]
        se = (
            math.sqrt(t.coverage * (1 - t.coverage) / t.n)
            if t.n > 0 else math.nan
        )
        rows.append((
            args.method_name, group, t.n, t.coverage, se,
            t.mean_width, t.inf_width_count, t.discontiguity_rate,
        ))
    config = {
        "command": "evaluate", "group": args.group, "bins": args.bins,
        "method_name": args.method_name,
    }
    io.write_report_rows_csv(args.out, rows, config)
    if args.widths_out:
        io.write_widths_csv(args.widths_out, order, y_true, sets, config)
    return EXIT_OK


def cmd_report(args) -> int:
    overrides = {}
    if args.replications is not None:
        overrides["replications"] = args.replications
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    if args.n is not None:
        overrides["n"] = args.n
    if args.alpha is not None:
        overrides["alpha"] = _parse_alpha(args.alpha)
    if args.study == "lognormal":
        if args.zero_prob is not None:
            raise ConfigurationError("--zero-prob only applies to the zicount study")
        config = lognormal_study(**overrides)
    else:
        if args.zero_prob is not None:
            overrides["zero_prob"] = args.zero_prob
        config = zicount_study(**overrides)
    if args.methods is not None:
        keep = [name.strip() for name in args.methods.split(",")]
        available = {m.name for m in config.methods}
        unknown = [name for name in keep if name not in available]
        if unknown:
            raise ConfigurationError(
                f"unknown method names {unknown}; available: {sorted(available)}"
            )
        config = type(config)(**{
            **config.__dict__,
            "methods": tuple(m for m in config.methods if m.name in keep),
        })
    if args.bootstrap_b is not None:
        config = type(config)(**{**config.__dict__, "bootstrap_draws": args.bootstrap_b})
    report = run_replications(config)
    io.write_report_csv(args.out, report)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "intervals": cmd_intervals,
    "evaluate": cmd_evaluate,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors itself
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except BinConformalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"file error: {exc}", file=sys.stderr)
        return EXIT_DATA


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
