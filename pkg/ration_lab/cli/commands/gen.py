"""
Instance generator commands
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from ration_lab.bounds import regime
from ration_lab.core.demand import FiniteSupportModel
from ration_lab.core.errors import InvalidInstance
from ration_lab.core.models import GeneratorSpec, Regime
from ration_lab.core.storage import ReportStore, instance_file_from_model
from ration_lab.instances import (
    EafrCurve,
    WorstCaseTfrCdf,
    discretize_worst_case,
    example1_instance,
    hard_instance_overdemanded,
    hard_instance_underdemanded,
    worstcase_tfr_model,
)

logger = logging.getLogger(__name__)

_EAFR_POINTS = 1001


def model_from_generator(spec: GeneratorSpec, regime_given: bool = True) -> FiniteSupportModel:
    """Build the generator's model; an explicit regime must match mu and n."""
    if spec.kind == "hard":
        which = regime(spec.mu, spec.n)
        if regime_given and spec.regime != which:
            raise InvalidInstance(
                f"mu={spec.mu} with n={spec.n} is {which.value}-demanded, not {spec.regime.value}"
            )
        if which == Regime.OVER_DEMANDED:
            return hard_instance_overdemanded(spec.n, spec.mu)
        return hard_instance_underdemanded(spec.n, spec.mu)
    if spec.kind == "example1":
        return example1_instance(spec.eps)
    return worstcase_tfr_model(spec.mu, spec.eps, spec.atoms, max(spec.n, 2))


def eafr_frame(mu: float, atoms: int) -> pd.DataFrame:
    """R(q) of the worst-case distribution and of its discretisation on a quantile grid."""
    qs = np.linspace(0.0, 1.0, _EAFR_POINTS)[1:]
    exact = WorstCaseTfrCdf(mu).curve()
    discrete = EafrCurve.from_atoms(*discretize_worst_case(mu, atoms))
    return pd.DataFrame(
        {
            "q": qs,
            "tfr": exact.T(qs),
            "eafr": exact.R(qs),
            "eafr_discretized": discrete.R(qs),
        }
    )


async def _write_instance(args: argparse.Namespace, model: FiniteSupportModel) -> Optional[Path]:
    instance_file = instance_file_from_model(model)
    if not args.out:
        sys.stdout.write(instance_file.model_dump_json(indent=2, exclude_none=True) + "\n")
        return None
    path = Path(args.out).absolute()
    await ReportStore(path.parent).save_instance(instance_file, path)
    logger.info(f"Wrote {model.support_size()} scenarios to {path}")
    return path


async def cmd_gen(args: argparse.Namespace) -> int:
    spec = GeneratorSpec(
        kind=args.kind,
        n=args.n,
        mu=args.mu,
        regime=Regime(args.regime) if args.regime else Regime.OVER_DEMANDED,
        eps=args.eps,
        atoms=args.atoms,
    )
    model = model_from_generator(spec, args.regime is not None)
    path = await _write_instance(args, model)

    if spec.kind == "worst-tfr":
        eafr_path = args.eafr or (path.with_suffix(".eafr.csv") if path else None)
        if eafr_path is not None:
            eafr_frame(spec.mu, spec.atoms).to_csv(eafr_path, index=False, float_format="%.17g")
            logger.info(f"Wrote EAFR curve data to {eafr_path}")
    return 0


def register(subparsers: argparse._SubParsersAction) -> None:
    gen = subparsers.add_parser("gen", help="write a generated instance file")
    gen.add_argument("kind", choices=["hard", "example1", "worst-tfr"])
    gen.add_argument("--n", type=int, default=2, help="agents")
    gen.add_argument("--mu", type=float, default=1.0, help="supply scarcity")
    gen.add_argument("--regime", choices=[r.value for r in Regime], default=None)
    gen.add_argument("--eps", type=float, default=0.01)
    gen.add_argument("--atoms", type=int, default=2000, help="atoms when discretising the worst case")
    gen.add_argument("--eafr", default=None, help="CSV file for the EAFR curve (worst-tfr only)")
    gen.set_defaults(handler=cmd_gen)
