"""
ration_lab command-line entry point
"""
import argparse
import asyncio
import logging
import sys
from typing import Optional, Sequence

from pydantic import ValidationError

from ration_lab.cli.commands import bounds, extensions, gen, run, seir, table2
from ration_lab.core.config import settings
from ration_lab.core.errors import RationLabError
from ration_lab.core.models import OutputFormat

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ration_lab",
        description="Sequential rationing policies: evaluation, bounds and the SEIR case study",
    )
    parser.add_argument("--seed", type=int, default=0, help="base seed for all random streams")
    parser.add_argument(
        "--threads", type=int, default=None, help="evaluation workers (env RATION_LAB_THREADS)"
    )
    parser.add_argument(
        "--format", choices=[f.value for f in OutputFormat], default=OutputFormat.JSON.value
    )
    parser.add_argument("--out", default=None, help="output file; stdout when omitted")
    parser.add_argument("--log-level", default=None, help="overrides RATION_LAB_LOG_LEVEL")

    subparsers = parser.add_subparsers(dest="command", required=True)
    for module in (bounds, run, gen, seir, extensions, table2):
        module.register(subparsers)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse, dispatch and map failures to exit codes: 2 for bad input, 3 for numerical failure."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.log_level:
        logging.getLogger().setLevel(args.log_level.upper())
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG

    try:
        return asyncio.run(args.handler(args))
    except ValidationError as e:
        print(f"error: invalid input: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except RationLabError as e:
        code = EXIT_CONFIG if isinstance(e, ValueError) else EXIT_NUMERICAL
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return code
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


def configure_logging() -> None:
    logging.basicConfig(
        level=getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
