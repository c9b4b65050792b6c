"""Command-line front end: run scenarios, plot logs, run the acceptance sweep.

Exit codes: 0 success, 1 acceptance criteria failed, 2 simulation fell over,
3 bad configuration or bad input files.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import acceptance, output, svgplot
from .config import ConfigError, load_scenario
from .sim import SimDivergedError, run_scenario

EXIT_OK = 0
EXIT_CRITERIA_FAILED = 1
EXIT_DIVERGED = 2
EXIT_BAD_INPUT = 3


def _add_set_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config value (repeatable), e.g. --set command.vx=0.8",
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quadmpc",
        description="Quadruped MPC locomotion: simulate, plot, verify.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a scenario and write log.csv + summary.txt")
    p_run.add_argument("--scenario", metavar="PATH", default=None,
                       help="INI-style scenario file (defaults to the built-in trot)")
    _add_set_flag(p_run)
    p_run.add_argument("--output", metavar="DIR", default=None,
                       help="output directory (overrides output.dir)")

    p_plot = sub.add_parser("plot", help="render an SVG figure from a log.csv")
    p_plot.add_argument("log", metavar="LOG_CSV", help="path to a log.csv")
    p_plot.add_argument("figure", metavar="FIGURE",
                        help="one of: " + ", ".join(svgplot.FIGURE_NAMES))
    p_plot.add_argument("--output", metavar="PATH", default=None,
                        help="output SVG path (default: <figure>.svg beside the log)")

    p_acc = sub.add_parser("accept", help="run the acceptance sweep")
    p_acc.add_argument("--only", action="append", default=[], metavar="NAME",
                       help="run only this criterion (repeatable); names: "
                            + ", ".join(acceptance.CRITERIA))
    _add_set_flag(p_acc)
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        cfg = load_scenario(args.scenario, args.overrides)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except OSError as exc:
        print(f"error: cannot read scenario: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    out_dir = args.output if args.output is not None else cfg.output

    code = EXIT_OK
    try:
        log = run_scenario(cfg)
    except SimDivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        log = exc.log  # truncated log is still worth keeping
        code = EXIT_DIVERGED
    csv_path, summary_path = output.write_run_outputs(log, cfg, out_dir)
    print(f"wrote {csv_path}")
    print(f"wrote {summary_path}")
    return code


def _cmd_plot(args: argparse.Namespace) -> int:
    try:
        cols = output.read_log_csv(args.log)
    except OSError as exc:
        print(f"error: cannot read log: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except output.MissingColumnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    path = args.output
    if path is None:
        path = os.path.join(os.path.dirname(os.path.abspath(args.log)),
                            f"{args.figure}.svg")
    try:
        svgplot.write_figure(cols, args.figure, path)
    except svgplot.UnknownFigureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_accept(args: argparse.Namespace) -> int:
    only = args.only or None
    try:
        results = acceptance.run_all(only=only, overrides=args.overrides)
    except acceptance.UnknownCriterionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    return EXIT_OK if all(r.passed for r in results) else EXIT_CRITERIA_FAILED


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "plot": _cmd_plot, "accept": _cmd_accept}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
