"""Command-line entry point: ``crudecast <stage|run> --config FILE [--seed N] [--out DIR]``.

Exit status is 0 on success, 1 when the configuration or its inputs fail
validation, and 2 when a stage fails (the stage name goes to stderr).
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import __version__, pipeline
from .errors import ConfigError, StageError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crudecast",
        description="Screen media signals against a daily price series and benchmark ARIMA/ARIMAX forecasts.",
    )
    parser.add_argument("--version", action="version", version=f"crudecast {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    helps = {
        "ingest": "parse raw inputs into per-source daily observations",
        "features": "align every source to the trading calendar and inner-join",
        "correlate": "lagged Pearson correlation table",
        "granger": "ADF stationarity table and Granger causality table",
        "fit": "fit the model battery and score out-of-sample forecasts",
        "report": "forecast figure and run summary",
        "run": "all stages in order",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text)
        p.add_argument("--config", required=True, help="TOML run configuration")
        p.add_argument("--seed", type=int, default=None, help="override the configured seed")
        p.add_argument("--out", default=None, help="override the output directory")
        p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = pipeline.load_config(args.config, out=args.out, seed=args.seed)
    except (ConfigError, ValueError) as exc:
        print(f"crudecast: invalid configuration: {exc}", file=sys.stderr)
        return 1
    stages = pipeline.STAGES if args.command == "run" else (args.command,)
    try:
        for stage in stages:
            pipeline.run_stage(cfg, stage)
    except StageError as exc:
        print(f"crudecast: stage {exc.stage} failed: {exc.cause}", file=sys.stderr)
        return 2
    print(f"crudecast: {', '.join(stages)} done; artifacts in {cfg.output_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
