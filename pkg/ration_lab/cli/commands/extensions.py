"""
Endowment and welfare commands
"""
import argparse
import json
import math
from pathlib import Path
from typing import List

import aiofiles
from pydantic import ValidationError

from ration_lab.cli.output import csv_floats, emit
from ration_lab.core.errors import ConfigError
from ration_lab.core.fill_rates import fill_rates
from ration_lab.core.models import EndowmentResult, MultiResourceSpec, WelfareResult, WelfareTrace
from ration_lab.extensions import endowment_objective, optimize_endowment, wpm_welfare


async def cmd_endowment(args: argparse.Namespace) -> int:
    """Spend the budget on resources so as to maximise the multi-resource guarantee"""
    spec = MultiResourceSpec(
        mus=args.mus,
        weights=args.weights,
        costs=args.costs,
        budget=args.budget,
    )
    supplies = optimize_endowment(spec, args.n)
    result = EndowmentResult(
        supplies=supplies,
        objective=endowment_objective(spec, supplies, args.n),
        spent=float(sum(c * s for c, s in zip(spec.costs, supplies))),
    )
    await emit(args, [result])
    return 0


async def load_traces(path: str) -> List[WelfareTrace]:
    """A JSON object {"demands": [...], "allocations": [...]} or a list of them."""
    target = Path(path)
    if not target.exists():
        raise ConfigError(f"trace file {path} does not exist")
    async with aiofiles.open(target, "r") as f:
        content = await f.read()
    try:
        data = json.loads(content)
        items = data if isinstance(data, list) else [data]
        return [WelfareTrace.model_validate(item) for item in items]
    except (json.JSONDecodeError, ValidationError) as e:
        raise ConfigError(f"invalid trace file {path}: {e}") from e


def _alpha(text: str) -> float:
    if text.lower() in ("inf", "infinity"):
        return math.inf
    return float(text)


async def cmd_welfare(args: argparse.Namespace) -> int:
    rows = []
    for i, trace in enumerate(await load_traces(args.trace)):
        rows.append(
            WelfareResult(
                trace=i,
                alpha=args.alpha,
                welfare=wpm_welfare(args.alpha, trace.demands, trace.allocations),
                min_fill_rate=float(fill_rates(trace.allocations, trace.demands).min()),
            )
        )
    await emit(args, rows)
    return 0


def register(subparsers: argparse._SubParsersAction) -> None:
    endowment = subparsers.add_parser("endowment", help="optimise supplies under a budget")
    endowment.add_argument("--budget", type=float, required=True)
    endowment.add_argument("--costs", type=csv_floats, required=True)
    endowment.add_argument("--weights", type=csv_floats, required=True)
    endowment.add_argument("--mus", type=csv_floats, required=True, help="expected demand per resource")
    endowment.add_argument("--n", type=int, required=True)
    endowment.set_defaults(handler=cmd_endowment)

    welfare = subparsers.add_parser("welfare", help="power-mean welfare of allocation traces")
    welfare.add_argument("--alpha", type=_alpha, required=True, help="fairness parameter, or inf")
    welfare.add_argument("--trace", required=True, help="JSON trace file")
    welfare.set_defaults(handler=cmd_welfare)
