"""
Factor-revealing LPs behind the ex-post upper bound
"""
import logging
from dataclasses import dataclass
from typing import Optional, Protocol, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog

from ration_lab.core.errors import CertificateViolation, SolverFailure
from ration_lab.core.models import LpCertificate, Regime

logger = logging.getLogger(__name__)


class LpSolver(Protocol):
    """Minimises c @ z subject to A_ub z <= b_ub and variable bounds."""

    def solve(
        self,
        c: np.ndarray,
        A_ub: np.ndarray,
        b_ub: np.ndarray,
        bounds: Sequence[Tuple[float, Optional[float]]],
    ) -> Tuple[float, np.ndarray]:
        ...


class HighsSolver:
    """scipy HiGHS backend; 'highs-ds' is dual simplex, 'highs-ipm' interior point."""

    def __init__(self, method: str = "highs-ds"):
        if method not in ("highs", "highs-ds", "highs-ipm"):
            raise ValueError(f"unknown HiGHS method {method}")
        self.method = method

    def solve(self, c, A_ub, b_ub, bounds):
        result = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method=self.method)
        if result.status != 0:
            raise SolverFailure(f"{self.method} failed: {result.message}")
        return float(result.fun), result.x


def regime(mu: float, n: int) -> Regime:
    return Regime.OVER_DEMANDED if mu >= 1.0 + 1.0 / n else Regime.UNDER_DEMANDED


def lp_certificate(n: int, mu: float) -> float:
    """Objective of the closed-form dual assignment in the regime of (n, mu)."""
    if regime(mu, n) == Regime.OVER_DEMANDED:
        return (n + 1) / (2.0 * n * mu)
    return 1.0 - n * mu / (2.0 * (n + 1))


@dataclass(frozen=True)
class FactorRevealingLP:
    """max obj @ z + constant over z = (y_1..y_n, r_1..r_n) >= 0 with

    r_s <= slope * y_s,  r_s <= r_{s-1} (r_0 = 1),  sum_s y_s <= 1.
    """
    n: int
    mu: float
    regime: Regime
    objective: np.ndarray
    constant: float
    A_ub: np.ndarray
    b_ub: np.ndarray

    @classmethod
    def build(cls, n: int, mu: float) -> "FactorRevealingLP":
        if n < 1 or mu < 0:
            raise ValueError(f"need n >= 1 and mu >= 0, got n={n}, mu={mu}")
        which = regime(mu, n)
        if which == Regime.OVER_DEMANDED:
            slope = (n + 1) / (2.0 * mu)
            weight, constant = 1.0 / n, 0.0
        else:
            slope = n / 2.0
            weight, constant = mu / (n + 1), 1.0 - n * mu / (n + 1)

        A = np.zeros((2 * n + 1, 2 * n))
        b = np.zeros(2 * n + 1)
        for s in range(n):
            A[s, n + s] = 1.0
            A[s, s] = -slope
            A[n + s, n + s] = 1.0
            if s == 0:
                b[n] = 1.0
            else:
                A[n + s, n + s - 1] = -1.0
        A[2 * n, :n] = 1.0
        b[2 * n] = 1.0
        objective = np.concatenate([np.zeros(n), np.full(n, weight)])
        return cls(n, mu, which, objective, constant, A, b)

    def solve(self, solver: Optional[LpSolver] = None) -> float:
        solver = solver or HighsSolver()
        value, _ = solver.solve(
            -self.objective, self.A_ub, self.b_ub, [(0.0, None)] * (2 * self.n)
        )
        return -value + self.constant


def lp_verify(n: int, mu: float, solver: Optional[LpSolver] = None) -> LpCertificate:
    """Solve the regime's primal LP and check it against the dual certificate."""
    lp = FactorRevealingLP.build(n, mu)
    primal = lp.solve(solver)
    certificate = lp_certificate(n, mu)
    gap = certificate - primal
    if primal > certificate + 1e-7:
        raise CertificateViolation(
            f"primal {primal:.10f} exceeds certificate {certificate:.10f} (n={n}, mu={mu})"
        )
    if abs(gap) > 1e-6:
        raise CertificateViolation(
            f"primal {primal:.10f} misses certificate {certificate:.10f} (n={n}, mu={mu})"
        )
    logger.debug(f"LP n={n} mu={mu} {lp.regime.value}: primal {primal:.8f}, gap {gap:.2e}")
    return LpCertificate(
        n=n, mu=mu, regime=lp.regime, primal=primal, dual_certificate=certificate, gap=gap
    )
