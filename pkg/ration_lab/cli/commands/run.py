"""
Policy evaluation command
"""
import argparse
import logging
from pathlib import Path

from ration_lab.bounds import kappa_a, kappa_p
from ration_lab.cli.commands.gen import model_from_generator
from ration_lab.cli.output import emit, output_format, threads
from ration_lab.core.demand import InstanceSpec, SampleBankModel
from ration_lab.core.engine import EvaluationEngine
from ration_lab.core.models import ExperimentConfig, GeneratorSpec, Regime
from ration_lab.core.storage import ReportStore

logger = logging.getLogger(__name__)


def experiment_from_args(args: argparse.Namespace) -> ExperimentConfig:
    generator = None
    if args.gen is not None:
        generator = GeneratorSpec(
            kind=args.gen,
            n=args.n,
            mu=args.mu,
            regime=Regime(args.regime) if args.regime else Regime.OVER_DEMANDED,
            eps=args.eps,
            atoms=args.atoms,
        )
    return ExperimentConfig(
        instance=args.instance,
        generator=generator,
        bank=args.bank,
        policies=args.policy or [],
        paths=args.paths,
        seed=args.seed,
        output=args.out,
        format=output_format(args),
    )


async def load_experiment_instance(config: ExperimentConfig, args: argparse.Namespace) -> InstanceSpec:
    if config.instance is not None:
        store = ReportStore(Path(config.instance).absolute().parent)
        return await store.load_instance(config.instance)
    if config.bank is not None:
        store = ReportStore(Path(config.bank).absolute().parent)
        demands, provenance = await store.load_bank(Path(config.bank).absolute())
        k = provenance.k if provenance is not None else args.k
        model = SampleBankModel(demands, k)
        # Default supply equals the bank's mean total demand, i.e. mu = 1
        supply = model.expected_total() / (args.bank_mu or 1.0)
        return InstanceSpec(n_agents=model.n_agents, supply=supply, model=model)
    model = model_from_generator(config.generator, args.regime is not None)
    return InstanceSpec(n_agents=model.n_agents, supply=1.0, model=model)


async def cmd_run(args: argparse.Namespace) -> int:
    """Evaluate each requested policy and report it next to the kappa bounds"""
    config = experiment_from_args(args)
    instance = await load_experiment_instance(config, args)
    engine = EvaluationEngine(threads(args))
    run = await engine.execute_batch(instance, config.policies, config.paths, config.seed)
    bound_p = kappa_p(instance.mu, instance.n_agents)
    bound_a = kappa_a(instance.mu, instance.n_agents)
    rows = [r.model_copy(update={"kappa_p": bound_p, "kappa_a": bound_a}) for r in run.reports]
    for line in run.logs:
        logger.debug(line)
    await emit(args, rows)
    return 0


def register(subparsers: argparse._SubParsersAction) -> None:
    run = subparsers.add_parser("run", help="evaluate policies on an instance")
    source = run.add_mutually_exclusive_group()
    source.add_argument("--instance", help="instance JSON file")
    source.add_argument("--gen", choices=["hard", "example1", "worst-tfr"], help="generated instance")
    source.add_argument("--bank", help="sample-path bank (JSON lines)")
    run.add_argument("--policy", action="append", help="policy string, repeatable, e.g. tfr:0.5 or dp:1/400")
    run.add_argument("--paths", type=int, default=10_000, help="Monte Carlo paths when not enumerable")
    run.add_argument("--n", type=int, default=2)
    run.add_argument("--mu", type=float, default=1.0)
    run.add_argument("--regime", choices=[r.value for r in Regime], default=None)
    run.add_argument("--eps", type=float, default=0.01)
    run.add_argument("--atoms", type=int, default=2000)
    run.add_argument("--k", type=int, default=10, help="neighbours for bank conditioning")
    run.add_argument("--bank-mu", type=float, default=None, help="scarcity when rationing a bank (default 1)")
    run.set_defaults(handler=cmd_run)
