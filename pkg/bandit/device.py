"""
Device side of the federated protocol: ridge estimation, UCB action
selection, local Gram accumulation and the event-triggered sync test.

Bookkeeping follows the usual event-triggered semantics: a sync resets the
local deltas (U, u) and the rounds-since-sync counter; a round without sync
keeps the deltas and increments the counter.
"""

from dataclasses import dataclass, field
from typing import Any, Optional, Tuple

import numpy as np
import scipy.linalg as la

from core.exceptions import CorruptedSyncStateError, InvalidInputError

TIE_RTOL = 1e-12


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


def cholesky_factor(matrix: np.ndarray, what: str = "matrix"):
    try:
        return la.cho_factor(matrix, lower=True, check_finite=True)
    except (la.LinAlgError, ValueError) as exc:
        raise CorruptedSyncStateError(f"{what} is not positive definite: {exc}") from exc


def log_det_spd(matrix: np.ndarray, what: str = "matrix") -> float:
    """log det of a symmetric positive-definite matrix via its Cholesky factor."""
    chol, _ = cholesky_factor(matrix, what)
    return float(2.0 * np.log(np.diag(chol)).sum())


@dataclass(frozen=True)
class SyncState:
    gram: np.ndarray
    reward_vec: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "gram", _readonly(self.gram))
        object.__setattr__(self, "reward_vec", _readonly(self.reward_vec))

    @classmethod
    def initial(cls, dimension: int, gamma_min: float) -> "SyncState":
        return cls(gram=gamma_min * np.eye(dimension), reward_vec=np.zeros(dimension))

    @property
    def dimension(self) -> int:
        return int(self.reward_vec.shape[0])


@dataclass
class DeviceState:
    local_gram: np.ndarray
    local_reward_vec: np.ndarray
    sync_state: SyncState
    rounds_since_sync: int = 0

    @classmethod
    def fresh(cls, sync_state: SyncState) -> "DeviceState":
        d = sync_state.dimension
        return cls(local_gram=np.zeros((d, d)), local_reward_vec=np.zeros(d), sync_state=sync_state)


@dataclass(frozen=True)
class ConfidenceEllipsoid:
    center: np.ndarray
    shape: np.ndarray
    radius: float
    # Cholesky factor of ``shape``, reused by select_action when present.
    factor: Optional[Any] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.radius < 0:
            raise InvalidInputError(f"ellipsoid radius must be nonnegative, got {self.radius}")


def effective_design(dev: DeviceState) -> Tuple[np.ndarray, np.ndarray]:
    V = dev.sync_state.gram + dev.local_gram
    V = 0.5 * (V + V.T)
    u_tilde = dev.sync_state.reward_vec + dev.local_reward_vec
    return V, u_tilde


def ridge_estimate(V: np.ndarray, u_tilde: np.ndarray, factor=None) -> np.ndarray:
    if factor is None:
        factor = cholesky_factor(V, "design matrix V")
    return la.cho_solve(factor, u_tilde)


def confidence_ellipsoid(dev: DeviceState, radius: float) -> ConfidenceEllipsoid:
    V, u_tilde = effective_design(dev)
    factor = cholesky_factor(V, "design matrix V")
    return ConfidenceEllipsoid(center=ridge_estimate(V, u_tilde, factor), shape=V, radius=radius, factor=factor)


def ucb_scores(ell: ConfidenceEllipsoid, actions: np.ndarray) -> np.ndarray:
    factor = ell.factor if ell.factor is not None else cholesky_factor(ell.shape, "ellipsoid shape")
    solved = la.cho_solve(factor, actions.T)  # V^-1 x for every action, (d, K)
    widths = np.sqrt(np.maximum(np.einsum("kd,dk->k", actions, solved), 0.0))
    return actions @ ell.center + ell.radius * widths


def select_action(ell: ConfidenceEllipsoid, actions) -> Tuple[int, np.ndarray]:
    """argmax of <theta_bar, x> + beta * ||x||_{V^-1}; lowest index wins ties."""
    actions = np.atleast_2d(np.asarray(actions, dtype=float))
    if actions.size == 0:
        raise InvalidInputError("action set is empty")
    scores = ucb_scores(ell, actions)
    best = scores.max()
    # scores within rounding of the maximum count as tied
    idx = int(np.flatnonzero(scores >= best - TIE_RTOL * max(1.0, abs(best)))[0])
    return idx, actions[idx]


def record_observation(dev: DeviceState, action: np.ndarray, reward: float) -> DeviceState:
    """Accumulate x x^T and y x into the local deltas (in place)."""
    x = np.asarray(action, dtype=float)
    dev.local_gram += np.outer(x, x)
    dev.local_reward_vec += reward * x
    return dev


def sync_trigger(
    dev: DeviceState,
    action: np.ndarray,
    gamma_max: float,
    gamma_min: float,
    threshold_D: float,
) -> bool:
    """Event test: log det(V + x x^T + (gmax - gmin) I) - log det(S) >= D / dt.

    Evaluated with the device's pre-update V, i.e. before record_observation.
    """
    if dev.rounds_since_sync == 0:
        return False
    limit = threshold_D / dev.rounds_since_sync
    if not np.isfinite(limit):
        return False

    x = np.asarray(action, dtype=float)
    V, _ = effective_design(dev)
    grown = V + np.outer(x, x) + (gamma_max - gamma_min) * np.eye(V.shape[0])
    ratio = log_det_spd(grown, "triggered design matrix") - log_det_spd(dev.sync_state.gram, "sync Gram S")
    return ratio >= limit


def apply_sync(dev: DeviceState, new_sync: SyncState) -> DeviceState:
    dev.sync_state = new_sync
    dev.local_gram = np.zeros_like(dev.local_gram)
    dev.local_reward_vec = np.zeros_like(dev.local_reward_vec)
    dev.rounds_since_sync = 0
    return dev


def advance_round(dev: DeviceState) -> DeviceState:
    """No-sync branch: keep the deltas and count one more round since the last sync."""
    dev.rounds_since_sync += 1
    return dev
