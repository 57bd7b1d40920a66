"""
Core data models and schemas
"""
import hashlib
from datetime import datetime
from enum import Enum
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class PolicyKind(str, Enum):
    """Sequential allocation policies available to the evaluation engine"""
    PPA = "ppa"
    PPA_MONOTONE = "ppa-monotone"
    TFR = "tfr"
    OPTIMAL_TFR = "opt-tfr"
    FIXED = "fixed"
    OPTIMAL_FIXED = "opt-fixed"
    OFFLINE = "offline"
    EXACT_DP = "dp"
    DISCRETIZED_DP = "fptas"


class EvaluationMode(str, Enum):
    """How expectations are computed"""
    EXACT = "exact"
    MONTE_CARLO = "monte_carlo"


class RunStatus(str, Enum):
    """Evaluation run states"""
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


class Regime(str, Enum):
    """Supply-scarcity regime of the factor-revealing LPs"""
    OVER_DEMANDED = "over"
    UNDER_DEMANDED = "under"


class OutputFormat(str, Enum):
    JSON = "json"
    CSV = "csv"


class TfrObjective(str, Enum):
    """What the threshold search maximises"""
    MIN_FILL_RATE = "min-fill-rate"  # expected minimum fill rate of the policy itself
    TOTAL_DEMAND = "total-demand"  # tau * P(tau * total demand <= 1)


class Table2Scenario(str, Enum):
    """Calibration settings of the SEIR case study"""
    BASE = "base"
    XI_MISSPEC = "xi_misspec"
    LAMBDA_MISSPEC = "lambda_misspec"
    XI_UNDERESTIMATE = "xi_underestimate"
    LAMBDA_OVERESTIMATE = "lambda_overestimate"


# ---------------------------------------------------------------------------
# Instance files


class SupportPoint(BaseModel):
    """One scenario of a finite-support joint distribution"""
    prob: float = Field(gt=0, le=1)
    demands: List[float]


class MarginalAtom(BaseModel):
    """One atom of a discrete per-agent marginal"""
    value: float = Field(ge=0)
    prob: float = Field(gt=0, le=1)


class SampleBankRef(BaseModel):
    """Pointer to a bank file on disk"""
    path: str
    k: int = Field(default=10, ge=1)


class ModelSpec(BaseModel):
    """Exactly one demand-model description"""
    finite_support: Optional[List[SupportPoint]] = None
    independent: Optional[List[List[MarginalAtom]]] = None
    sample_bank: Optional[SampleBankRef] = None

    @model_validator(mode="after")
    def exactly_one_kind(self) -> "ModelSpec":
        given = [
            name for name in ("finite_support", "independent", "sample_bank")
            if getattr(self, name) is not None
        ]
        if len(given) != 1:
            raise ValueError(f"model must define exactly one kind, got {given or 'none'}")
        return self


class InstanceFile(BaseModel):
    """Instance file: agents, supply and a demand model"""
    agents: int = Field(ge=1)
    supply: float = Field(default=1.0, gt=0)
    model: ModelSpec


# ---------------------------------------------------------------------------
# Reports


class FairnessReport(BaseModel):
    """Fairness estimates of one policy on one instance"""
    policy: str
    mode: EvaluationMode
    mu: float
    ex_post: float
    ex_ante: float
    ex_post_fairness: float
    ex_ante_fairness: float
    waste: float
    offline_ex_post: float
    paths_used: int
    half_width_95: float
    mean_fill_rates: List[float] = Field(default_factory=list)
    kappa_p: Optional[float] = None
    kappa_a: Optional[float] = None


class GuaranteeTable(BaseModel):
    """Closed-form guarantees for a (mu, n) pair"""
    mu: float = Field(ge=0)
    n: int = Field(ge=1)
    kappa_p: float
    kappa_a: float
    kappa_fa: float
    kappa_tfr: float
    w_bar: float
    kappa_tfr_cv: Optional[float] = None


class LpCertificate(BaseModel):
    """Numeric factor-revealing LP optimum against its dual certificate"""
    n: int
    mu: float
    regime: Regime
    primal: float
    dual_certificate: float
    gap: float


class EvaluationRun(BaseModel):
    """Result of evaluating a batch of policies on one instance"""
    run_id: str
    status: RunStatus
    start_time: datetime
    end_time: Optional[datetime] = None
    duration: Optional[float] = None
    reports: List[FairnessReport] = Field(default_factory=list)
    logs: List[str] = Field(default_factory=list)
    error_message: Optional[str] = None


class Table2Row(BaseModel):
    """One policy row of the SEIR case-study table"""
    scenario: Table2Scenario
    policy: str
    ex_post_fairness: float
    ex_ante_fairness: float
    waste: float
    tau: Optional[float] = None
    demand_cv: float
    calibration_mu: float


# ---------------------------------------------------------------------------
# SEIR


class TruncatedNormalSpec(BaseModel):
    mean: float
    sd: float = Field(ge=0)
    low: float
    high: float

    @model_validator(mode="after")
    def ordered(self) -> "TruncatedNormalSpec":
        if self.low > self.high:
            raise ValueError("truncation bounds are reversed")
        return self


class UniformRange(BaseModel):
    low: float
    high: float

    @model_validator(mode="after")
    def ordered(self) -> "UniformRange":
        if self.low > self.high:
            raise ValueError("uniform range is reversed")
        return self


def _line_graph(locations: int) -> List[Tuple[int, int]]:
    return [(i, i + 1) for i in range(locations - 1)]


class SeirConfig(BaseModel):
    """Networked SEIR parameters; defaults give the four-location line graph"""
    model_config = ConfigDict(populate_by_name=True)

    locations: int = Field(default=4, ge=1)
    populations: List[float] = Field(default_factory=lambda: [1000.0] * 4)
    edges: List[Tuple[int, int]] = Field(default_factory=lambda: _line_graph(4))
    alpha: List[float] = Field(default_factory=lambda: [0.015] * 4)
    delta: float = Field(default=0.25, ge=0)
    lambda_: float = Field(default=0.10, ge=0, alias="lambda")
    gamma0: TruncatedNormalSpec = Field(
        default_factory=lambda: TruncatedNormalSpec(mean=0.4, sd=0.15, low=0.0, high=1.0)
    )
    xi_r: UniformRange = Field(default_factory=lambda: UniformRange(low=-0.008, high=0.002))
    sigma_r: UniformRange = Field(default_factory=lambda: UniformRange(low=0.0, high=0.1))
    initial_exposed: List[float] = Field(default_factory=lambda: [1e-4, 0.0, 0.0, 0.0])
    horizon_days: int = Field(default=365, ge=1)
    dt: float = Field(default=0.1, gt=0)
    extinction_tol: float = Field(default=1e-8, ge=0)

    @field_validator("alpha")
    @classmethod
    def alpha_in_unit_interval(cls, value: List[float]) -> List[float]:
        if any(a < 0 or a > 1 for a in value):
            raise ValueError("alpha entries must lie in [0, 1]")
        return value

    @model_validator(mode="after")
    def consistent_shapes(self) -> "SeirConfig":
        L = self.locations
        for name in ("populations", "alpha", "initial_exposed"):
            if len(getattr(self, name)) != L:
                raise ValueError(f"{name} must have {L} entries")
        for a, b in self.edges:
            if not (0 <= a < L and 0 <= b < L) or a == b:
                raise ValueError(f"edge ({a}, {b}) is not a valid pair of locations")
        steps = 1.0 / self.dt
        if abs(steps - round(steps)) > 1e-9:
            raise ValueError("dt must divide one day evenly")
        return self

    @property
    def steps_per_day(self) -> int:
        return int(round(1.0 / self.dt))

    def config_hash(self) -> str:
        return hashlib.sha256(self.model_dump_json(by_alias=True).encode()).hexdigest()[:16]


class BankRecord(BaseModel):
    """One line of a bank file"""
    path_id: int
    demands: List[float]


class BankProvenance(BaseModel):
    """Sidecar describing how a bank was generated"""
    config_hash: Optional[str] = None
    seed: Optional[int] = None
    stream: Optional[int] = None
    paths: int
    k: int = 10


# ---------------------------------------------------------------------------
# Experiments and extensions


class GeneratorSpec(BaseModel):
    """Instance produced by a named generator instead of a file"""
    kind: Literal["hard", "example1", "worst-tfr"]
    n: int = Field(default=2, ge=1)
    mu: float = Field(default=1.0, ge=0)
    regime: Regime = Regime.OVER_DEMANDED
    eps: float = Field(default=0.01, ge=0)
    atoms: int = Field(default=2000, ge=1)


class ExperimentConfig(BaseModel):
    """Inputs of a policy evaluation run"""
    instance: Optional[str] = None
    generator: Optional[GeneratorSpec] = None
    bank: Optional[str] = None
    policies: List[str] = Field(min_length=1)
    paths: int = Field(default=10_000, ge=1)
    seed: int = 0
    output: Optional[str] = None
    format: OutputFormat = OutputFormat.JSON

    @model_validator(mode="after")
    def one_source(self) -> "ExperimentConfig":
        given = [s for s in (self.instance, self.generator, self.bank) if s is not None]
        if len(given) != 1:
            raise ValueError("exactly one of instance, generator or bank is required")
        return self


class MultiResourceSpec(BaseModel):
    """Several resources rationed side by side"""
    supplies: List[float] = Field(default_factory=list)
    mus: List[float]
    weights: List[float]
    costs: List[float] = Field(default_factory=list)
    budget: Optional[float] = None

    @model_validator(mode="after")
    def validate_resources(self) -> "MultiResourceSpec":
        m = len(self.mus)
        if m == 0:
            raise ValueError("at least one resource is required")
        if len(self.weights) != m:
            raise ValueError("weights and mus differ in length")
        if any(w < 0 for w in self.weights) or abs(sum(self.weights) - 1.0) > 1e-12:
            raise ValueError("weights must be non-negative and sum to 1")
        if any(mu < 0 for mu in self.mus):
            raise ValueError("expected demands must be non-negative")
        if self.supplies and (len(self.supplies) != m or any(s <= 0 for s in self.supplies)):
            raise ValueError("supplies must be positive, one per resource")
        if self.costs and (len(self.costs) != m or any(c <= 0 for c in self.costs)):
            raise ValueError("costs must be positive, one per resource")
        if self.budget is not None and self.budget <= 0:
            raise ValueError("budget must be positive")
        return self

    @property
    def scarcities(self) -> List[float]:
        supplies = self.supplies or [1.0] * len(self.mus)
        return [mu / s for mu, s in zip(self.mus, supplies)]


class EndowmentResult(BaseModel):
    """Supplies bought under a budget and the guarantee they secure"""
    supplies: List[float]
    objective: float
    spent: float


class WelfareTrace(BaseModel):
    """One allocation trace for welfare evaluation"""
    demands: List[float]
    allocations: List[float]

    @model_validator(mode="after")
    def same_length(self) -> "WelfareTrace":
        if len(self.demands) != len(self.allocations):
            raise ValueError("demands and allocations differ in length")
        return self


class WelfareResult(BaseModel):
    trace: int
    alpha: float
    welfare: float
    min_fill_rate: float
