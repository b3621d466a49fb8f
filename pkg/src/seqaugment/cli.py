"""Command-line entry point.

Usage: seqaugment <maketoy|train|generate|balance|evaluate|downstream|report>
       --config <file> [--set key=value ...]

Exit codes: 0 success, 2 config error, 3 data error, 4 training
divergence, 5 missing upstream artifact. Errors print one
machine-parsable line on stderr: `seqaugment: error category=<Name> ...`.
"""

from __future__ import annotations

import argparse
import sys

from . import pipeline
from .config import config_hash, load_config
from .errors import (
    ConfigInvalid,
    DataError,
    MissingArtifact,
    SeqAugmentError,
    TrainingError,
)

COMMANDS = ("maketoy", "train", "generate", "balance", "evaluate", "downstream", "report")

_EXIT_CODES = (
    (ConfigInvalid, 2),
    (DataError, 3),
    (TrainingError, 4),
    (MissingArtifact, 5),
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqaugment",
        description="Balance an imbalanced clinical time-series cohort with "
        "generative or resampling augmentation, and evaluate the result.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name, help=f"run the {name} step")
        cmd.add_argument("--config", help="flat key-value config file")
        cmd.add_argument(
            "--set", dest="overrides", action="append", default=[],
            metavar="KEY=VALUE", help="override a config value (repeatable)",
        )
        if name == "generate":
            cmd.add_argument(
                "--count", type=int, default=None,
                help="number of synthetic patients (default: the class deficit)",
            )
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = load_config(args.config, args.overrides)
    if args.command == "maketoy":
        out = pipeline.cmd_maketoy(cfg)
    elif args.command == "train":
        out = pipeline.cmd_train(cfg)
    elif args.command == "generate":
        out = pipeline.cmd_generate(cfg, count=args.count)
    elif args.command == "balance":
        out = pipeline.cmd_balance(cfg)[1]
    elif args.command == "evaluate":
        out = pipeline.cmd_evaluate(cfg)
    elif args.command == "downstream":
        out = pipeline.cmd_downstream(cfg)
    else:
        out = pipeline.cmd_report(cfg)
    print(f"[seqaugment] {args.command} ok (config {config_hash(cfg)}): {out}")
    return 0


def main(argv=None) -> int:
    try:
        return run(argv)
    except SeqAugmentError as exc:
        code = 1
        for err_type, err_code in _EXIT_CODES:
            if isinstance(exc, err_type):
                code = err_code
                break
        print(
            f"seqaugment: error category={type(exc).__name__} exit={code}: {exc}",
            file=sys.stderr,
        )
        return code


if __name__ == "__main__":
    sys.exit(main())
