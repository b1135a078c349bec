"""Command line: ``haarstab-lab run --config cfg.json [overrides]``.

Exit status is 0 when every check passes, 1 when one fails (its name is
printed), 2 for configuration errors.
"""
from __future__ import annotations

import argparse
import json
import sys

from ..gridfn import WindowOverflowError
from .experiments import EXPERIMENTS, ConfigError, ExperimentConfig, run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="haarstab-lab")
    sub = parser.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one experiment")
    r.add_argument("--config", help="JSON file with ExperimentConfig fields")
    r.add_argument("--experiment", choices=EXPERIMENTS)
    r.add_argument("--dim", type=int)
    r.add_argument("--resolution", type=int)
    r.add_argument("--eta", type=float, action="append", metavar="ETA",
                   help="repeat for several values")
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.add_argument("--no-align", action="store_true")
    return parser


def load_config(args) -> ExperimentConfig:
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"{args.config}: {exc.strerror}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{args.config}: config must be a JSON object")
    overrides = {"experiment": args.experiment, "dim": args.dim, "resolution": args.resolution,
                 "seed": args.seed, "out": args.out}
    data.update({k: v for k, v in overrides.items() if v is not None})
    if args.dim is not None:
        data.pop("dims", None)
    if args.eta:
        data["eta_list"] = args.eta
    if args.no_align:
        data["align"] = False
    return ExperimentConfig.from_dict(data)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args)
    except (ConfigError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        report = run(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except WindowOverflowError as exc:
        print(f"window overflow: {exc}", file=sys.stderr)
        return 1
    for c in report.checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}: {c['value']} ({c['limit']})")
    if not report.passed:
        print(f"failing: {', '.join(report.failing)}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
