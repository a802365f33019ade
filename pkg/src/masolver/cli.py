"""Command-line driver.

    masolver solve <config.json> [--out DIR] [--seed S] [--quiet]
    masolver sweep <config.json> --param {eta1,eta2,k} --grid v1,v2,... [--out DIR]

Exit codes: 0 success, 1 configuration error, 2 solver abort.
MASOLVER_THREADS controls how many (seed, method) cells run in parallel.
"""

import argparse
import logging
import sys

from . import experiment
from .config import load_config
from .exceptions import ConfigError, SolverAbortError


def _parser():
    parser = argparse.ArgumentParser(prog="masolver")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="run every method in the config")
    solve.add_argument("config", help="experiment config (JSON)")
    solve.add_argument("--out", default=None, help="output directory override")
    solve.add_argument("--seed", type=int, default=None, help="run a single seed")
    solve.add_argument("--quiet", action="store_true")

    sweep = sub.add_parser("sweep", help="rerun the mas methods over a parameter grid")
    sweep.add_argument("config", help="experiment config (JSON)")
    sweep.add_argument("--param", required=True, choices=["eta1", "eta2", "k"])
    sweep.add_argument("--grid", required=True, help="comma-separated values")
    sweep.add_argument("--out", default=None)
    sweep.add_argument("--quiet", action="store_true")
    return parser


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s"
    )
    try:
        raw = load_config(args.config)
        if args.command == "solve":
            experiment.run_experiment(
                raw, out_dir=args.out, seed_override=args.seed, quiet=args.quiet
            )
        else:
            try:
                grid = [float(v) for v in args.grid.split(",") if v.strip()]
            except ValueError as err:
                raise ConfigError(f"bad grid: {err}") from err
            experiment.sweep(raw, args.param, grid, out_dir=args.out, quiet=args.quiet)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 1
    except SolverAbortError as err:
        print(f"solver error: {err}", file=sys.stderr)
        return 2
    return 0


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
