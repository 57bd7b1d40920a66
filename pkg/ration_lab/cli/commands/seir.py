"""
SEIR simulation command
"""
import argparse
import logging
from pathlib import Path

import aiofiles
from pydantic import ValidationError

from ration_lab.cli.output import threads
from ration_lab.core.errors import ConfigError
from ration_lab.core.models import SeirConfig
from ration_lab.core.storage import ReportStore
from ration_lab.seir import build_bank_async

logger = logging.getLogger(__name__)


async def load_seir_config(path: str) -> SeirConfig:
    target = Path(path)
    if not target.exists():
        raise ConfigError(f"SEIR config {path} does not exist")
    async with aiofiles.open(target, "r") as f:
        content = await f.read()
    try:
        return SeirConfig.model_validate_json(content)
    except ValidationError as e:
        raise ConfigError(f"invalid SEIR config {path}: {e}") from e


async def cmd_seir_simulate(args: argparse.Namespace) -> int:
    """Simulate a bank of peak-demand paths and write it as JSON lines"""
    config = await load_seir_config(args.config) if args.config else SeirConfig()
    bank = await build_bank_async(config, args.paths, args.seed, threads=threads(args), k=args.k)
    path = Path(args.out or "bank.jsonl").absolute()
    await ReportStore(path.parent).save_bank(bank.demands, path, bank.provenance)
    logger.info(f"Bank written to {path} (total-demand CV {bank.total_cv():.3f})")
    return 0


def register(subparsers: argparse._SubParsersAction) -> None:
    seir = subparsers.add_parser("seir", help="SEIR demand simulation")
    actions = seir.add_subparsers(dest="seir_command", required=True)
    simulate = actions.add_parser("simulate", help="build a sample-path bank")
    simulate.add_argument("--config", default=None, help="SeirConfig JSON (defaults otherwise)")
    simulate.add_argument("--paths", type=int, default=1000)
    simulate.add_argument("--k", type=int, default=None, help="neighbours recorded with the bank")
    simulate.set_defaults(handler=cmd_seir_simulate)
