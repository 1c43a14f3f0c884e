from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence

import torch

from profile_rec import __version__, logs
from profile_rec.commands import (
    register_data,
    register_evaluation,
    register_profiles,
    register_retrieval,
    register_training,
)
from profile_rec.errors import ProfileRecError, UsageError

logger = logging.getLogger(__name__)


class ArgumentParser(argparse.ArgumentParser):
    """Raises UsageError instead of exiting so main owns every exit code."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        raise UsageError(f"{message}.")


def positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return number


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="profile-rec", description="Text-profile recommendation toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", choices=("DEBUG", "INFO", "WARNING", "ERROR"), help="overrides PROFILE_REC_LOG_LEVEL")
    parser.add_argument("--quiet", action="store_true", help="hide progress bars")
    parser.add_argument("--workers", type=positive_int, default=None, help="cap torch threads and LLM concurrency")
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)
    register_data(subparsers)
    register_training(subparsers)
    register_retrieval(subparsers)
    register_evaluation(subparsers)
    register_profiles(subparsers)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"error: {exc.detail}\n")
        return exc.exit_code

    logs.configure(args.log_level)
    if args.workers is not None:
        torch.set_num_threads(args.workers)
    try:
        return args.handler(args)
    except ProfileRecError as exc:
        logger.debug("%s failed", args.command, exc_info=True)
        sys.stderr.write(f"error: {exc.detail}\n")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
