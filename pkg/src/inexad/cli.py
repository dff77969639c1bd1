"""Command-line entry point.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

import argparse
import sys

from .harness import ExperimentConfig, emit_report, run_experiment
from .training import DEFAULT_LAMBDA_GRID, MODES


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="inexad",
        description="Train and evaluate anomaly detectors on data with "
                    "set-level weak anomaly labels.",
    )
    parser.add_argument("--dataset", choices=["synthetic", "csv"],
                        default="synthetic", help="data source")
    parser.add_argument("--csv", metavar="PATH",
                        help="CSV file (required when --dataset csv)")
    parser.add_argument("--label-col", default="label",
                        help="label column name (default: label)")
    parser.add_argument("--mode", action="append", choices=list(MODES),
                        help="mode to run; repeatable (default: proposed)")
    parser.add_argument("--lambda", dest="fixed_lambda", type=float,
                        help="fixed ranking weight (skips grid search)")
    parser.add_argument("--lambda-grid", metavar="V1,V2,...",
                        help="comma-separated grid for lambda selection")
    parser.add_argument("--repeats", type=int, default=10,
                        help="number of repeated random splits (default: 10)")
    parser.add_argument("--seed", type=int, default=0,
                        help="base RNG seed (default: 0)")
    parser.add_argument("--epochs", type=int, default=1000,
                        help="maximum training epochs (default: 1000)")
    parser.add_argument("--patience", type=int, default=100,
                        help="early-stopping patience in epochs (default: 100)")
    parser.add_argument("--out", default="results",
                        help="output directory (default: results)")
    return parser


def cli_parse(argv):
    """Parse argv into an ExperimentConfig; raises SystemExit(2) on usage errors."""
    parser = _build_parser()
    if not argv:
        parser.print_help()
        raise SystemExit(2)
    args = parser.parse_args(argv)
    if args.fixed_lambda is not None and args.lambda_grid is not None:
        parser.error("--lambda and --lambda-grid are mutually exclusive")
    if args.dataset == "csv" and not args.csv:
        parser.error("--dataset csv requires --csv PATH")
    if args.lambda_grid is not None:
        try:
            grid = tuple(float(v) for v in args.lambda_grid.split(","))
        except ValueError:
            parser.error(f"cannot parse --lambda-grid {args.lambda_grid!r}")
    else:
        grid = DEFAULT_LAMBDA_GRID
    return ExperimentConfig(
        dataset=args.dataset,
        csv_path=args.csv,
        label_col=args.label_col,
        modes=tuple(args.mode) if args.mode else ("proposed",),
        n_repeats=args.repeats,
        seed=args.seed,
        fixed_lambda=args.fixed_lambda,
        lambda_grid=grid,
        max_epochs=args.epochs,
        patience=args.patience,
        out_dir=args.out,
    )


def main(argv=None):
    config = cli_parse(sys.argv[1:] if argv is None else argv)
    try:
        report = run_experiment(config)
        files = emit_report(report, config.out_dir)
    except Exception as exc:  # surface runtime failures as exit code 1
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for mode, res in sorted(report.modes.items()):
        print(f"{mode}: mean test AUC {res.mean:.3f} "
              f"(stderr {res.stderr:.3f}, {len(res.aucs)} repeats)")
    print(f"wrote {len(files)} files to {config.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
