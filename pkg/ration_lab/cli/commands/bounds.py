"""
Commands for closed-form guarantees and LP certificates
"""
import argparse
import logging

from ration_lab.bounds import HighsSolver, guarantee_table, kappa_tfr_cv, lp_verify
from ration_lab.cli.output import emit

logger = logging.getLogger(__name__)


async def cmd_bounds(args: argparse.Namespace) -> int:
    """Guarantee table for every (mu, n) pair"""
    rows = []
    for mu in args.mu:
        for n in args.n:
            table = guarantee_table(mu, n)
            if args.cv is not None:
                table.kappa_tfr_cv = kappa_tfr_cv(mu, args.cv)
            rows.append(table)
    await emit(args, rows)
    return 0


async def cmd_lp_verify(args: argparse.Namespace) -> int:
    """Solve the factor-revealing LPs and compare with their dual certificates"""
    solver = HighsSolver(args.solver)
    rows = [lp_verify(n, mu, solver) for mu in args.mu for n in args.n]
    worst = max(abs(r.gap) for r in rows)
    logger.info(f"Verified {len(rows)} LPs, largest gap {worst:.2e}")
    await emit(args, rows)
    return 0


def register(subparsers: argparse._SubParsersAction) -> None:
    bounds = subparsers.add_parser("bounds", help="closed-form fairness guarantees")
    bounds.add_argument("--mu", type=float, nargs="+", required=True, help="supply scarcities")
    bounds.add_argument("--n", type=int, nargs="+", required=True, help="numbers of agents")
    bounds.add_argument("--cv", type=float, default=None, help="coefficient-of-variation cap for the TFR bound")
    bounds.set_defaults(handler=cmd_bounds)

    lp = subparsers.add_parser("lp-verify", help="check LP optima against dual certificates")
    lp.add_argument("--mu", type=float, nargs="+", required=True)
    lp.add_argument("--n", type=int, nargs="+", required=True)
    lp.add_argument("--solver", choices=["highs-ds", "highs-ipm", "highs"], default="highs-ds")
    lp.set_defaults(handler=cmd_lp_verify)
