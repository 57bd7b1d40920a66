"""
SEIR case-study table command
"""
import argparse

from ration_lab.cli.commands.seir import load_seir_config
from ration_lab.cli.output import emit, threads
from ration_lab.core.models import SeirConfig, Table2Scenario
from ration_lab.seir import CaseStudy


async def cmd_table2(args: argparse.Namespace) -> int:
    """Ex-post fairness, ex-ante fairness and waste per policy for each scenario"""
    config = await load_seir_config(args.config) if args.config else SeirConfig()
    study = CaseStudy(config, threads(args))
    rows = []
    for name in args.scenario:
        rows.extend(
            await study.run(
                Table2Scenario(name),
                paths=args.paths,
                seed=args.seed,
                calibration_paths=args.calibration_paths,
                with_dp=args.with_dp,
                dp_levels=args.dp_levels,
            )
        )
    await emit(args, rows)
    return 0


def register(subparsers: argparse._SubParsersAction) -> None:
    table2 = subparsers.add_parser("table2", help="SEIR case study with mis-specified calibration")
    table2.add_argument(
        "--scenario",
        nargs="+",
        choices=[s.value for s in Table2Scenario],
        default=[Table2Scenario.BASE.value],
    )
    table2.add_argument("--paths", type=int, default=1000, help="evaluation paths")
    table2.add_argument("--calibration-paths", type=int, default=None)
    table2.add_argument("--config", default=None, help="SeirConfig JSON for the evaluation model")
    table2.add_argument("--with-dp", action="store_true", help="also evaluate a coarse DP")
    table2.add_argument("--dp-levels", type=int, default=20, help="DP grid of 1/levels")
    table2.set_defaults(handler=cmd_table2)
