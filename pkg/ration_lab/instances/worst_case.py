"""
Worst-case distribution for target-fill-rate policies and EAFR curves
"""
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import integrate

from ration_lab.bounds.guarantees import q_hat
from ration_lab.core.config import settings
from ration_lab.core.demand import FiniteSupportModel
from ration_lab.core.errors import InvalidInstance

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WorstCaseTfrCdf:
    """CDF of inverse total demand v that minimises the best target fill rate.

    0 below q_hat, 1 - q_hat/v on [q_hat, 1), 1 - q_hat on [1, inf) and the
    remaining q_hat at v = inf (no demand at all).
    """
    mu: float

    @property
    def q_hat(self) -> float:
        return q_hat(self.mu)

    def cdf(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        q = self.q_hat
        inner = 1.0 - q / np.where(v > 0, v, 1.0)
        out = np.where(v < q, 0.0, np.where(v < 1.0, inner, 1.0 - q))
        return np.where(np.isposinf(v), 1.0, out)

    def density(self, v: float) -> float:
        q = self.q_hat
        return q / (v * v) if q <= v < 1.0 else 0.0

    def mean_inverse(self) -> float:
        """E[1/v] by numerical integration; equals mu."""
        value, _ = integrate.quad(lambda v: self.density(v) / v, self.q_hat, 1.0, epsabs=1e-13)
        return value

    def revenue(self, tau) -> np.ndarray:
        """tau * (1 - G(tau)): fill rate tau reached with the probability it is affordable."""
        tau = np.asarray(tau, dtype=float)
        return tau * (1.0 - self.cdf(tau))

    def curve(self) -> "EafrCurve":
        q = self.q_hat
        return EafrCurve(
            cdf=self.cdf,
            tfr_of_quantile=lambda u: np.where(u > q, q / np.where(u > 0, u, 1.0), np.inf),
        )


@dataclass(frozen=True)
class EafrCurve:
    """Quantile view of an inverse-demand CDF G.

    Q(tau) = 1 - G(tau); T(q) = inf{v : G(v) > 1 - q}; R(q) = q T(q).
    Built from atoms the maximisation is exact; otherwise a dense scan.
    """
    cdf: Callable[[np.ndarray], np.ndarray]
    tfr_of_quantile: Callable[[np.ndarray], np.ndarray]
    atoms: Optional[Tuple[np.ndarray, np.ndarray]] = None

    @classmethod
    def from_atoms(cls, values, probs) -> "EafrCurve":
        values = np.asarray(values, dtype=float)
        probs = np.asarray(probs, dtype=float)
        order = np.argsort(values, kind="stable")
        values, probs = values[order], probs[order]
        cumulative = np.cumsum(probs)

        def cdf(v):
            idx = np.searchsorted(values, np.asarray(v, dtype=float), side="right")
            return np.where(idx > 0, cumulative[np.maximum(idx - 1, 0)], 0.0)

        def tfr_of_quantile(u):
            level = 1.0 - np.asarray(u, dtype=float)
            idx = np.searchsorted(cumulative, level + 1e-15, side="right")
            return values[np.minimum(idx, values.size - 1)]

        return cls(cdf=cdf, tfr_of_quantile=tfr_of_quantile, atoms=(values, probs))

    @classmethod
    def uniform(cls, low: float, high: float) -> "EafrCurve":
        """v uniform on [low, high]"""
        width = high - low
        return cls(
            cdf=lambda v: np.clip((np.asarray(v, dtype=float) - low) / width, 0.0, 1.0),
            tfr_of_quantile=lambda u: low + (1.0 - np.asarray(u, dtype=float)) * width,
        )

    def Q(self, tau) -> np.ndarray:
        return 1.0 - self.cdf(tau)

    def T(self, q) -> np.ndarray:
        return self.tfr_of_quantile(q)

    def R(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        t = self.T(q)
        return np.where(np.isfinite(t), q * np.where(np.isfinite(t), t, 0.0), np.inf)


def eafr_max(curve: EafrCurve, scan: int = 100_000) -> Tuple[float, float]:
    """(q*, R(q*)) maximising R over quantiles whose target fill rate lies in [0, 1]."""
    if curve.atoms is not None:
        values, probs = curve.atoms
        tail = np.cumsum(probs[::-1])[::-1]
        feasible = values <= 1.0
        if not feasible.any():
            return 0.0, 0.0
        revenue = np.where(feasible, values * tail, -np.inf)
        best = float(revenue.max())
        k = int(np.flatnonzero(revenue >= best - 1e-15)[0])
        return float(tail[k]), best
    qs = np.linspace(0.0, 1.0, scan + 1)[1:]
    t = curve.T(qs)
    feasible = np.isfinite(t) & (t >= 0.0) & (t <= 1.0)
    if not feasible.any():
        return 0.0, 0.0
    revenue = np.where(feasible, qs * np.where(feasible, t, 0.0), -np.inf)
    best = float(revenue.max())
    k = int(np.flatnonzero(revenue >= best - 1e-12)[0])
    return float(qs[k]), best


def discretize_worst_case(mu: float, atoms: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Atoms of inverse total demand approximating the worst-case CDF.

    The continuous part is cut into bins of equal width in log v, each atom
    placed where 1/v equals the bin's conditional mean of 1/v, so E[1/v] = mu
    holds exactly. Returns (inverse values v, probabilities); v = inf is the
    no-demand atom.
    """
    if mu <= 0:
        raise InvalidInstance("worst-case distribution needs mu > 0")
    m = settings.WORST_CASE_ATOMS if atoms is None else atoms
    if m < 1:
        raise InvalidInstance("need at least one atom")
    q = q_hat(mu)
    edges = np.geomspace(q, 1.0, m + 1)
    edges[-1] = 1.0
    mass = q / edges[:-1] - q / edges[1:]
    inverse_mean = 0.5 * (1.0 / edges[:-1] + 1.0 / edges[1:])
    values = np.append(1.0 / inverse_mean, np.inf)
    probs = np.append(mass, 0.0)
    probs[-1] = 1.0 - probs[:-1].sum()
    mean_inverse = float(probs[:-1] @ inverse_mean)
    logger.debug(f"Worst-case atoms m={m}: E[1/v]={mean_inverse:.12f} vs mu={mu}")
    return values, probs


def worstcase_tfr_model(
    mu: float,
    epsilon: float,
    atoms: Optional[int] = None,
    n_agents: int = 2,
) -> FiniteSupportModel:
    """Embed the worst-case CDF: d_1 = (1 - eps)/v and a deterministic last demand eps*mu.

    Extra agents with zero demand sit between the two so that the last agent
    still has positive demand.
    """
    if not 0.0 < epsilon <= 0.1:
        raise InvalidInstance(f"epsilon must lie in (0, 0.1], got {epsilon}")
    if n_agents < 2:
        raise InvalidInstance("the embedding needs at least two agents")
    values, probs = discretize_worst_case(mu, atoms)
    first = np.where(np.isinf(values), 0.0, (1.0 - epsilon) / np.where(np.isinf(values), 1.0, values))
    demands = np.zeros((values.size, n_agents))
    demands[:, 0] = first
    demands[:, -1] = epsilon * mu
    return FiniteSupportModel(probs, demands)
