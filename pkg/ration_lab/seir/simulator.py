"""
Networked SEIR dynamics with a random-walk interaction rate
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from ration_lab.core.errors import SimulationUnstable
from ration_lab.core.models import SeirConfig
from ration_lab.core.random_streams import SEIR_STREAM, path_rng

logger = logging.getLogger(__name__)

# Compartment order in every state array
S, E, I, R = 0, 1, 2, 3

_RANGE_TOL = 1e-6


@dataclass(frozen=True)
class PathDraw:
    """Random inputs of one simulated path"""
    gamma0: float
    xi: float
    sigma: float
    steps: np.ndarray  # X_1..X_{horizon-1}, one per day after day 0

    def daily_gamma(self) -> np.ndarray:
        """gamma_t for t = 0..horizon-1"""
        walk = np.concatenate([[0.0], np.cumsum(self.steps)])
        return self.gamma0 * np.exp(walk)


def _truncated_normal(rng: np.random.Generator, mean: float, sd: float, low: float, high: float) -> float:
    if sd == 0:
        return float(min(max(mean, low), high))
    while True:
        x = rng.normal(mean, sd)
        if low <= x <= high:
            return float(x)


def draw_path(config: SeirConfig, rng: np.random.Generator) -> PathDraw:
    """gamma_0, the walk's drift and volatility, then its daily steps, in that order."""
    g = config.gamma0
    gamma0 = _truncated_normal(rng, g.mean, g.sd, g.low, g.high)
    xi = float(rng.uniform(config.xi_r.low, config.xi_r.high))
    sigma = float(rng.uniform(config.sigma_r.low, config.sigma_r.high))
    steps = rng.normal(xi, sigma, size=config.horizon_days - 1)
    return PathDraw(gamma0=gamma0, xi=xi, sigma=sigma, steps=steps)


def neighbour_weights(config: SeirConfig) -> np.ndarray:
    """W[i, j] = 1/|N_i| for neighbours j of i."""
    L = config.locations
    adjacency = np.zeros((L, L))
    for a, b in config.edges:
        adjacency[a, b] = adjacency[b, a] = 1.0
    degree = adjacency.sum(axis=1)
    return adjacency / np.where(degree > 0, degree, 1.0)[:, None]


class SeirSystem:
    """Right-hand side of the networked SEIR equations for a batch of paths.

    States have shape (P, 4, L). The neighbour coupling is accumulated column
    by column so every path's arithmetic is independent of the batch it is in.
    """

    def __init__(self, config: SeirConfig):
        self.config = config
        self.weights = neighbour_weights(config)
        alpha = np.asarray(config.alpha, dtype=float)
        isolated = self.weights.sum(axis=1) == 0
        self.alpha = np.where(isolated, 0.0, alpha)
        self.delta = config.delta
        self.lam = config.lambda_

    def infection_pressure(self, infected: np.ndarray) -> np.ndarray:
        pressure = (1.0 - self.alpha) * infected
        neighbours = np.zeros_like(infected)
        for j in range(infected.shape[1]):
            neighbours = neighbours + infected[:, j:j + 1] * self.weights[:, j]
        return pressure + self.alpha * neighbours

    def derivative(self, state: np.ndarray, gamma: np.ndarray) -> np.ndarray:
        s, e, i = state[:, S], state[:, E], state[:, I]
        new_exposed = gamma[:, None] * s * self.infection_pressure(i)
        onset = self.delta * e
        recovery = self.lam * i
        out = np.empty_like(state)
        out[:, S] = -new_exposed
        out[:, E] = new_exposed - onset
        out[:, I] = onset - recovery
        out[:, R] = recovery
        return out

    def rk4_step(self, state: np.ndarray, gamma: np.ndarray, dt: float) -> np.ndarray:
        k1 = self.derivative(state, gamma)
        k2 = self.derivative(state + 0.5 * dt * k1, gamma)
        k3 = self.derivative(state + 0.5 * dt * k2, gamma)
        k4 = self.derivative(state + dt * k3, gamma)
        return state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def initial_state(config: SeirConfig, paths: int) -> np.ndarray:
    exposed = np.asarray(config.initial_exposed, dtype=float)
    state = np.zeros((paths, 4, config.locations))
    state[:, S] = 1.0 - exposed
    state[:, E] = exposed
    return state


def simulate_batch(
    config: SeirConfig,
    draws: List[PathDraw],
    record: bool = False,
) -> Tuple[Optional[np.ndarray], np.ndarray]:
    """Integrate a batch of paths; returns (daily states or None, peak infected persons (P, L)).

    A path stops updating its peaks once its total E + I falls below the
    extinction tolerance; the batch stops when every path has.
    """
    system = SeirSystem(config)
    P = len(draws)
    gammas = np.stack([d.daily_gamma() for d in draws], axis=1)  # (days, P)
    state = initial_state(config, P)
    peaks = state[:, I].copy()
    active = np.ones(P, dtype=bool)
    populations = np.asarray(config.populations, dtype=float)
    dt = config.dt
    daily = [state.copy()] if record else None

    for day in range(config.horizon_days):
        gamma = gammas[day]
        for _ in range(config.steps_per_day):
            state = system.rk4_step(state, gamma, dt)
            peaks = np.where(active[:, None], np.maximum(peaks, state[:, I]), peaks)
        if not np.all(np.isfinite(state)) or state.min() < -_RANGE_TOL or state.max() > 1.0 + _RANGE_TOL:
            raise SimulationUnstable(
                f"compartment left [0, 1] on day {day + 1} "
                f"(min {np.nanmin(state):.3e}, max {np.nanmax(state):.3e}); reduce dt"
            )
        if record:
            daily.append(state.copy())
        burden = (state[:, E] + state[:, I]).sum(axis=1)
        active &= burden >= config.extinction_tol
        if not active.any():
            logger.debug(f"All {P} paths extinct after {day + 1} days")
            break

    trajectories = np.stack(daily) if record else None
    return trajectories, peaks * populations


def peak_days(trajectories: np.ndarray) -> np.ndarray:
    """Day of peak infection per path and location from recorded (days + 1, P, 4, L) states."""
    return np.argmax(trajectories[:, :, I, :], axis=0)


def simulate_path(
    config: SeirConfig,
    seed: int,
    path: int = 0,
    draw: Optional[PathDraw] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Daily states (days + 1, 4, L) and peak infected persons per location.

    Without an explicit draw, the inputs come from the path's SEIR stream, so
    the result matches row `path` of a bank built with the same seed.
    """
    if draw is None:
        draw = draw_path(config, path_rng(seed, path, SEIR_STREAM))
    trajectories, peaks = simulate_batch(config, [draw], record=True)
    return trajectories[:, 0], peaks[0]
