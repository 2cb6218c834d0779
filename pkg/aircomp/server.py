"""
Edge-server post-processing: turn the noisy aggregated Gram matrix into a
positive-definite SyncState before it is broadcast.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from bandit.device import SyncState
from core.exceptions import InvalidInputError

logger = logging.getLogger("aircomp.server")

DEFAULT_PD_EPSILON = 1e-6


def _min_eigenvalue(gram: np.ndarray) -> float:
    return float(la.eigvalsh(gram, subset_by_index=[0, 0])[0])


@dataclass(frozen=True)
class EigenFloorShift:
    """Add (eps - lambda_min) I only when lambda_min < eps."""

    epsilon: float = DEFAULT_PD_EPSILON

    def shift(self, gram: np.ndarray) -> float:
        lam = _min_eigenvalue(gram)
        return max(0.0, self.epsilon - lam)


@dataclass(frozen=True)
class FixedShift:
    """Always add r I (r = gamma_max of the run), then guard with the eigenvalue floor."""

    r: float
    epsilon: float = DEFAULT_PD_EPSILON

    def shift(self, gram: np.ndarray) -> float:
        lam = _min_eigenvalue(gram) + self.r
        return self.r + max(0.0, self.epsilon - lam)


SHIFT_POLICIES = ("eigen_floor", "fixed_shift")


def make_shift_policy(name: str, epsilon: float = DEFAULT_PD_EPSILON, r: float = 0.0):
    if name == "eigen_floor":
        return EigenFloorShift(epsilon)
    if name == "fixed_shift":
        return FixedShift(r=r, epsilon=epsilon)
    raise InvalidInputError(f"unknown PSD shift policy {name!r}, expected one of {SHIFT_POLICIES}")


def server_postprocess(raw_gram: np.ndarray, raw_vec: np.ndarray, shift_policy=None) -> SyncState:
    raw_gram = np.asarray(raw_gram, dtype=float)
    if not np.allclose(raw_gram, raw_gram.T, rtol=0.0, atol=1e-9 * max(1.0, np.abs(raw_gram).max())):
        raise InvalidInputError("aggregated gram is not symmetric")
    policy = shift_policy if shift_policy is not None else EigenFloorShift()

    amount = policy.shift(raw_gram)
    if amount > 0:
        logger.debug("PSD post-processing shift %.6g", amount)
        raw_gram = raw_gram + amount * np.eye(raw_gram.shape[0])
    return SyncState(gram=raw_gram, reward_vec=raw_vec)
