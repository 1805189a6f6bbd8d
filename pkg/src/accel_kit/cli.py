"""Command-line entry point.

Subcommands::

    accel-kit solve         --config cfg.json [--output trace.csv] [--seed N]
    accel-kit compare       --config cfg.json [--output trace.csv] [--seed N]
    accel-kit rfactor-sweep --config cfg.json [--output sweep.csv] [--seed N]
    accel-kit mm-info       matrix.mtx

``solve`` runs the single configured method, ``compare`` runs a method sweep
and prints a ranking, ``rfactor-sweep`` samples start angles on the 2x2 model
problem, and ``mm-info`` inspects a Matrix Market file.  Report paths render a
matplotlib figure next to the CSV unless ``--no-plot`` is given.

Exit codes: 0 success, 1 solver non-convergence, 2 configuration error,
3 I/O error.
"""

from __future__ import annotations

import argparse
import sys

import scipy.io

from .bench import (
    compare_methods,
    load_config,
    ranking_lines,
    rfactor_sweep,
    run_experiment,
    summary_lines,
)
from .errors import AccelKitError, ConfigError

EXIT_OK = 0
EXIT_NOT_CONVERGED = 1
EXIT_CONFIG = 2
EXIT_IO = 3


def _add_run_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", required=True, help="path to the JSON run configuration")
    sub.add_argument("--output", default=None, help="CSV output path (overrides the config)")
    sub.add_argument("--seed", type=int, default=None,
                     help="override the seed of random start vectors / sweeps")
    sub.add_argument("--quiet", action="store_true", help="suppress the printed summary")
    sub.add_argument("--no-plot", action="store_true",
                     help="skip rendering the figure next to the CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="accel-kit",
        description="Fixed-point acceleration experiments: Anderson mixing, "
        "optimal-trial-vector (CROP-style) methods, and Krylov references.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    solve_p = subs.add_parser("solve", help="run the single configured method")
    _add_run_flags(solve_p)
    solve_p.set_defaults(func=_cmd_solve)

    compare_p = subs.add_parser("compare", help="run all configured methods and rank them")
    _add_run_flags(compare_p)
    compare_p.set_defaults(func=_cmd_compare)

    sweep_p = subs.add_parser("rfactor-sweep",
                              help="sweep start angles on the 2x2 model problem")
    _add_run_flags(sweep_p)
    sweep_p.set_defaults(func=_cmd_sweep)

    mm_p = subs.add_parser("mm-info", help="inspect a Matrix Market file")
    mm_p.add_argument("path", help="Matrix Market (.mtx) file")
    mm_p.add_argument("--quiet", action="store_true")
    mm_p.set_defaults(func=_cmd_mm_info)
    return parser


def _require_output(config, args) -> None:
    if args.output is None and config.output is None:
        raise ConfigError("no output path: set \"output\" in the config or pass --output")


def _cmd_solve(args) -> int:
    config = load_config(args.config)
    if len(config.methods) != 1:
        raise ConfigError(f"solve needs exactly one method entry, got {len(config.methods)}")
    _require_output(config, args)
    result = run_experiment(config, output=args.output, seed_override=args.seed,
                            plot=not args.no_plot)
    if not args.quiet:
        for line in summary_lines(result):
            print(line)
        _print_outputs(result)
    return EXIT_OK if result.runs[0].converged else EXIT_NOT_CONVERGED


def _cmd_compare(args) -> int:
    config = load_config(args.config)
    _require_output(config, args)
    result, ranking = compare_methods(config, output=args.output, seed_override=args.seed,
                                      plot=not args.no_plot)
    if not args.quiet:
        for line in ranking_lines(ranking):
            print(line)
        _print_outputs(result)
    return EXIT_OK if any(run.converged for run in result.runs) else EXIT_NOT_CONVERGED


def _cmd_sweep(args) -> int:
    config = load_config(args.config)
    _require_output(config, args)
    result = rfactor_sweep(config, output=args.output, seed_override=args.seed,
                           plot=not args.no_plot)
    if not args.quiet:
        print(f"swept {config.angle_samples} angles x {len(config.methods)} methods")
        _print_outputs(result)
    return EXIT_OK


def _print_outputs(result) -> None:
    if result.csv_path is not None:
        print(f"trace written to {result.csv_path}")
    gamma = getattr(result, "gamma_csv_path", None)
    if gamma is not None:
        print(f"mixing weights written to {gamma}")
    if result.figure_path is not None:
        print(f"figure written to {result.figure_path}")


def _cmd_mm_info(args) -> int:
    import os

    from .problems import load_matrix_market  # validates format and squareness

    if not os.path.exists(args.path):
        raise FileNotFoundError(f"no such file: {args.path}")
    try:
        rows, cols, entries, fmt, fieldkind, symmetry = scipy.io.mminfo(args.path)
    except OSError:
        raise
    except Exception as exc:
        raise AccelKitError(f"cannot parse {args.path}: {exc}") from exc
    op = load_matrix_market(args.path)
    if not args.quiet:
        print(f"path:     {args.path}")
        print(f"shape:    {rows} x {cols}")
        print(f"entries:  {entries}")
        print(f"format:   {fmt}")
        print(f"field:    {fieldkind}")
        print(f"symmetry: {symmetry}")
        print(f"operator: dimension {op.dimension}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except AccelKitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
