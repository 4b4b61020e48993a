"""Command-line entry point.

Subcommands:

* ``gempic run`` - execute a configured simulation, writing
  ``diagnostics.csv`` (and optional dumps) to the output directory.
* ``gempic presets`` - list the built-in experiment presets.
* ``gempic check`` - run the invariant self-test suite.
* ``gempic report`` - render figures from a diagnostics CSV.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, list_presets, load_config, preset_config


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gempic",
        description="Structure-preserving spline PIC solver on mapped domains",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a simulation")
    p_run.add_argument("--config", help="path to a key = value config file")
    p_run.add_argument("--preset", help="name of a built-in preset")
    p_run.add_argument("--out", help="output directory (overrides config)")
    p_run.add_argument("--seed", type=int, help="RNG seed (overrides config)")
    p_run.add_argument(
        "--workers",
        type=int,
        default=1,
        help="compute threads (results are identical for any value)",
    )

    sub.add_parser("presets", help="list built-in presets")
    sub.add_parser("check", help="run the invariant self-test suite")

    p_rep = sub.add_parser("report", help="render figures from diagnostics")
    p_rep.add_argument("--csv", required=True, help="diagnostics.csv path")
    p_rep.add_argument("--out", help="figure directory (default: beside the CSV)")
    return parser


def _cmd_run(args) -> int:
    if bool(args.config) == bool(args.preset):
        print("run needs exactly one of --config or --preset", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config) if args.config else preset_config(args.preset)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out:
            cfg.out_dir = args.out
        cfg.validate()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.workers and args.workers > 0:
        try:
            import numba

            numba.set_num_threads(max(1, args.workers))
        except Exception:
            pass
    from .driver import run as run_sim

    try:
        csv_path = run_sim(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    print(csv_path)
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args = _build_parser().parse_args(argv)
    if args.command == "presets":
        for name in list_presets():
            print(name)
        return 0
    if args.command == "check":
        from .selfcheck import run_checks

        return 0 if run_checks() else 3
    if args.command == "report":
        from .plotting import render_report

        try:
            for path in render_report(args.csv, args.out):
                print(path)
        except OSError as exc:
            print(f"report error: {exc}", file=sys.stderr)
            return 2
        return 0
    return _cmd_run(args)


if __name__ == "__main__":
    sys.exit(main())
