"""
Linear bandit environment: hidden parameter, shared decision set,
Bernoulli rewards and pseudo-regret scoring.

The decision set is sampled once per trial and shared by every device and
round. One action is optimal with mean reward in OPTIMAL_WINDOW; the other
K-1 have mean rewards in SUBOPTIMAL_WINDOW.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt

from core.exceptions import EnvironmentGenerationError, InvalidInputError

logger = logging.getLogger("bandit.environment")

SUBOPTIMAL_WINDOW: Tuple[float, float] = (0.5, 0.6)
OPTIMAL_WINDOW: Tuple[float, float] = (0.7, 0.8)

ACTION_NORM_BOUND = 1.0  # L
THETA_NORM_BOUND = 1.0  # S
REWARD_BOUND = 1.0  # B
# Rewards live in [0, 1], hence (1/2)-sub-Gaussian.
REWARD_SUBGAUSSIAN = 0.5

DEFAULT_REJECTION_BUDGET = 10_000


class _WindowMiss(Exception):
    pass


@dataclass(frozen=True)
class Environment:
    theta_star: np.ndarray
    action_set: np.ndarray  # (K, d)
    optimal_action_index: int
    dimension: int
    num_devices: int = 1

    @property
    def num_actions(self) -> int:
        return int(self.action_set.shape[0])

    @property
    def optimal_action(self) -> np.ndarray:
        return self.action_set[self.optimal_action_index]

    @property
    def mean_rewards(self) -> np.ndarray:
        return self.action_set @ self.theta_star

    @property
    def gaps(self) -> np.ndarray:
        means = self.mean_rewards
        return means[self.optimal_action_index] - means


@dataclass(frozen=True)
class RewardSample:
    value: float
    device: int
    round_index: int


def _unit_vector(dimension: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal(dimension)
    return z / np.linalg.norm(z)


def _draw_action(theta_star: np.ndarray, window: Tuple[float, float], rng: np.random.Generator) -> np.ndarray:
    """One rejection-sampling attempt for an action with <x, theta*> inside window."""
    theta_norm = float(np.linalg.norm(theta_star))
    axis = theta_star / theta_norm
    target = rng.uniform(*window)
    along = target / theta_norm
    if along > ACTION_NORM_BOUND:
        raise _WindowMiss()

    z = _unit_vector(theta_star.shape[0], rng)
    perp = z - (z @ axis) * axis
    room = ACTION_NORM_BOUND**2 - along**2
    perp_sq = float(perp @ perp)
    if perp_sq > room:
        # shrink only the orthogonal part so the inner product stays on target
        perp = perp * np.sqrt(room / perp_sq)
    return along * axis + perp


def generate_environment(
    dimension: int,
    num_actions: int,
    rng_seed,
    num_devices: int = 1,
    theta_norm_range: Tuple[float, float] = (0.9, 1.0),
    rejection_budget: int = DEFAULT_REJECTION_BUDGET,
) -> Environment:
    """Build a deterministic environment from (dimension, num_actions, seed).

    ``rng_seed`` may be an int, a ``SeedSequence`` or anything else accepted by
    ``numpy.random.default_rng``.
    """
    if dimension < 2:
        raise InvalidInputError(f"dimension must be >= 2, got {dimension}")
    if num_actions < 1 or num_actions > dimension**2:
        raise InvalidInputError(f"num_actions must be in [1, d^2={dimension**2}], got {num_actions}")
    lo, hi = theta_norm_range
    if not 0.0 < lo <= hi <= THETA_NORM_BOUND:
        raise InvalidInputError(f"theta_norm_range must lie in (0, {THETA_NORM_BOUND}], got {theta_norm_range}")

    rng = np.random.default_rng(rng_seed)
    theta_star = _unit_vector(dimension, rng) * rng.uniform(lo, hi)

    retrying = Retrying(
        stop=stop_after_attempt(rejection_budget),
        retry=retry_if_exception_type(_WindowMiss),
        reraise=True,
    )

    optimal_index = int(rng.integers(num_actions))
    actions = np.empty((num_actions, dimension))
    for k in range(num_actions):
        window = OPTIMAL_WINDOW if k == optimal_index else SUBOPTIMAL_WINDOW
        try:
            actions[k] = retrying(_draw_action, theta_star, window, rng)
        except _WindowMiss:
            raise EnvironmentGenerationError(
                f"no action with <x, theta*> in {window} after {rejection_budget} attempts "
                f"(|theta*| = {np.linalg.norm(theta_star):.4f})"
            ) from None

    theta_star.setflags(write=False)
    actions.setflags(write=False)
    logger.debug("Environment d=%d K=%d optimal=%d", dimension, num_actions, optimal_index)
    return Environment(
        theta_star=theta_star,
        action_set=actions,
        optimal_action_index=optimal_index,
        dimension=dimension,
        num_devices=num_devices,
    )


def sample_reward(
    env: Environment,
    action: np.ndarray,
    rng: np.random.Generator,
    device: int = 0,
    round_index: int = 0,
) -> RewardSample:
    mean = float(np.asarray(action) @ env.theta_star)
    if not 0.0 <= mean <= REWARD_BOUND:
        raise InvalidInputError(f"Bernoulli mean {mean} outside [0, {REWARD_BOUND}]")
    value = 1.0 if rng.random() < mean else 0.0
    return RewardSample(value=value, device=device, round_index=round_index)


def instantaneous_regret(env: Environment, action: np.ndarray) -> float:
    best = float(env.optimal_action @ env.theta_star)
    return best - float(np.asarray(action) @ env.theta_star)
