"""
Report emission shared by all commands
"""
import argparse
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from pydantic import BaseModel

from ration_lab.core.config import parse_floats, settings
from ration_lab.core.errors import ConfigError
from ration_lab.core.models import OutputFormat
from ration_lab.core.storage import ReportStore, render


def csv_floats(text: str) -> List[float]:
    """argparse type for '1,2.5,3'"""
    try:
        return parse_floats(text)
    except ConfigError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def threads(args: argparse.Namespace) -> int:
    return args.threads if args.threads is not None else settings.THREADS


def output_format(args: argparse.Namespace) -> OutputFormat:
    return OutputFormat(args.format)


async def emit(args: argparse.Namespace, rows: Sequence[BaseModel], out: Optional[str] = None) -> None:
    """Write rows to --out (or the given path) or print them to stdout."""
    target = out or args.out
    fmt = output_format(args)
    if target:
        path = Path(target).absolute()
        await ReportStore(path.parent).save_report(rows, path, fmt)
    else:
        sys.stdout.write(render(rows, fmt))
        sys.stdout.write("\n")
