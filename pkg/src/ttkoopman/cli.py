"""Command-line entry point.

Three subcommands mirror the harness stages::

    ttkoopman simulate --config cfg.json --out data/
    ttkoopman identify --config cfg.json --data data/*.csv --out run/
    ttkoopman report --in run/report.json --max-degree 2 --out tables/

Exit codes: 0 success, 2 validation error (bad config, files, arguments),
3 numerical failure (integration breakdown, singular logarithm, degenerate
data).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .errors import (DegenerateInputError, IntegrationError,
                     SingularLogarithmError, SizeCapError)
from .harness import ExperimentConfig, cmd_identify, cmd_report, cmd_simulate

VALIDATION_ERRORS = (ValueError, KeyError, OSError, SizeCapError,
                     json.JSONDecodeError)
NUMERICAL_ERRORS = (IntegrationError, SingularLogarithmError,
                    DegenerateInputError, np.linalg.LinAlgError)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ttkoopman",
        description="Koopman generator identification in tensor-train format",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="integrate trajectories to snapshot CSVs")
    sim.add_argument("--config", required=True, help="experiment config JSON")
    sim.add_argument("--out", required=True, help="output directory")

    ident = sub.add_parser("identify", help="identify the generator from CSVs")
    ident.add_argument("--config", required=True, help="experiment config JSON")
    ident.add_argument("--data", required=True, nargs="+",
                       help="snapshot CSV file(s), one per trajectory")
    ident.add_argument("--out", required=True, help="output directory")

    rep = sub.add_parser("report", help="render tables from a report JSON")
    rep.add_argument("--in", dest="report_path", required=True,
                     help="report JSON from identify")
    rep.add_argument("--max-degree", type=int, default=2,
                     help="keep terms of total degree up to this (default 2)")
    rep.add_argument("--out", required=True, help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            cfg = ExperimentConfig.from_json(args.config)
            paths = cmd_simulate(cfg, args.out)
            for p in paths:
                print(p)
        elif args.command == "identify":
            cfg = ExperimentConfig.from_json(args.config)
            report_path = cmd_identify(cfg, args.data, args.out)
            print(report_path)
        elif args.command == "report":
            if args.max_degree < 0:
                raise ValueError("--max-degree cannot be negative")
            for p in cmd_report(args.report_path, args.max_degree, args.out):
                print(p)
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except VALIDATION_ERRORS as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
