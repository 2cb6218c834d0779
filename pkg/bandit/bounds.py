"""
Theoretical quantities: channel-noise bounds, the exploration radius
beta_bar_t, the sync threshold D and the pseudo-regret bound.

These feed the algorithm (beta, D, gamma constants) and serve as an
acceptance oracle for simulated regret.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from bandit.environment import ACTION_NORM_BOUND, REWARD_SUBGAUSSIAN, THETA_NORM_BOUND
from core.exceptions import InvalidInputError

logger = logging.getLogger("bandit.bounds")


@dataclass(frozen=True)
class BoundParams:
    alpha: float = 0.05
    C: float = 1.0
    c: float = 1.0
    nu: float = math.e
    gamma_floor: float = 1e-3
    lambda_reg: float = 1.0
    sigma_reward: float = REWARD_SUBGAUSSIAN
    S: float = THETA_NORM_BOUND
    L: float = ACTION_NORM_BOUND
    nominal_sync_rounds: Optional[int] = None


@dataclass(frozen=True)
class NoiseBounds:
    gamma_max: float
    gamma_min: float
    gamma_n: float
    kappa: float
    sigma_t: float
    failure_prob_alpha: float
    const_C: float
    const_c: float
    dimension: int
    horizon_n: int
    num_devices: int = 1
    gamma_min_clamped: bool = False

    @property
    def accuracy(self) -> float:
        """Per-bound failure probability alpha / (2 n M)."""
        return self.failure_prob_alpha / (2 * self.horizon_n * self.num_devices)

    @classmethod
    def error_free(cls, lambda_reg: float, dimension: int, alpha: float, horizon_n: int = 1, num_devices: int = 1):
        """Plain ridge regulariser in place of the channel-noise constants."""
        return cls(
            gamma_max=lambda_reg,
            gamma_min=lambda_reg,
            gamma_n=0.0,
            kappa=0.0,
            sigma_t=0.0,
            failure_prob_alpha=alpha,
            const_C=1.0,
            const_c=1.0,
            dimension=dimension,
            horizon_n=horizon_n,
            num_devices=num_devices,
        )


@dataclass(frozen=True)
class TheoryParams:
    nu: float
    threshold_D: float
    beta_bar: float
    regret_bound: float


def compute_noise_bounds(
    sigma_t: float,
    d: int,
    alpha: float,
    n: int,
    M: int,
    C: float = 1.0,
    c: float = 1.0,
    gamma_floor: float = 1e-3,
) -> NoiseBounds:
    if sigma_t < 0:
        raise InvalidInputError(f"sigma_t must be >= 0, got {sigma_t}")
    if not 0.0 < alpha < 1.0:
        raise InvalidInputError(f"alpha must be in (0, 1), got {alpha}")
    if d < 1:
        raise InvalidInputError(f"dimension must be >= 1, got {d}")

    common = dict(
        sigma_t=sigma_t,
        failure_prob_alpha=alpha,
        const_C=C,
        const_c=c,
        dimension=d,
        horizon_n=n,
        num_devices=M,
    )
    if sigma_t == 0:
        return NoiseBounds(gamma_max=0.0, gamma_min=0.0, gamma_n=0.0, kappa=0.0, **common)

    gamma_max = C * sigma_t * math.sqrt(d) * math.log(1.0 / alpha)
    gamma_min = (alpha - 2.0 * math.exp(-C * d)) / (2.0 * c) * sigma_t * (math.sqrt(d) - math.sqrt(d - 1))
    clamped = gamma_min <= 0
    if clamped:
        # never let the floor exceed gamma_max
        gamma_min = min(gamma_floor, gamma_max)
        logger.warning("gamma_min formula nonpositive (d=%d, alpha=%g); clamped to %g", d, alpha, gamma_min)
    gamma_n = sigma_t * (math.sqrt(d) + math.sqrt(2.0 * math.log(2.0 / alpha)))
    kappa = math.sqrt(2.0 * C * (1.0 / gamma_min) * gamma_n**2)
    return NoiseBounds(
        gamma_max=gamma_max,
        gamma_min=gamma_min,
        gamma_n=gamma_n,
        kappa=kappa,
        gamma_min_clamped=clamped,
        **common,
    )


def _require_positive_gamma_min(nb: NoiseBounds):
    if nb.gamma_min <= 0:
        raise InvalidInputError("gamma_min must be > 0; use NoiseBounds.error_free for a noiseless channel")


def log_growth(T: float, d: int, nb: NoiseBounds, L: float, nu: float = math.e) -> float:
    """log_nu(gamma_max / gamma_min + T L^2 / (d gamma_min))."""
    _require_positive_gamma_min(nb)
    x = nb.gamma_max / nb.gamma_min + T * L**2 / (d * nb.gamma_min)
    return math.log(x) / math.log(nu)


def beta_bar(t: int, nb: NoiseBounds, sigma_reward: float = 0.5, S_bound: float = 1.0, L_bound: float = 1.0) -> float:
    # always natural log here; nu only enters D and the regret bound
    inner = 2.0 * math.log(2.0 / nb.failure_prob_alpha) + nb.dimension * log_growth(t, nb.dimension, nb, L_bound)
    return sigma_reward * math.sqrt(inner) + S_bound * math.sqrt(nb.gamma_max) + nb.kappa


def threshold_D(T: int, d: int, nb: NoiseBounds, L: float = 1.0, nu: float = math.e) -> float:
    return 2.0 * T * d / (log_growth(T, d, nb, L, nu) + 1.0)


def regret_bound(T: int, M: int, d: int, nb: NoiseBounds, beta_T: float, L: float = 1.0, nu: float = math.e) -> float:
    return 4.0 * nu * beta_T * math.sqrt(2.0 * M * T * d * log_growth(T, d, nb, L, nu) + 1.0)


def default_sync_rounds(d: int, T: int, L: float = 1.0) -> int:
    """d * ceil(ln(1 + T L^2 / d)): sync-count scale of the noiseless protocol."""
    return max(1, d * math.ceil(math.log(1.0 + T * L**2 / d)))


@dataclass(frozen=True)
class AlgorithmConstants:
    noise_bounds: NoiseBounds
    threshold_D: float
    params: BoundParams
    error_free: bool

    @property
    def gamma_min(self) -> float:
        return self.noise_bounds.gamma_min

    @property
    def gamma_max(self) -> float:
        return self.noise_bounds.gamma_max

    def beta(self, t: int) -> float:
        return beta_bar(t, self.noise_bounds, self.params.sigma_reward, self.params.S, self.params.L)

    def theory(self, T: int, M: int) -> TheoryParams:
        d = self.noise_bounds.dimension
        beta_T = self.beta(T)
        return TheoryParams(
            nu=self.params.nu,
            threshold_D=self.threshold_D,
            beta_bar=beta_T,
            regret_bound=regret_bound(T, M, d, self.noise_bounds, beta_T, self.params.L, self.params.nu),
        )


def algorithm_constants(
    sigma_t: float,
    dimension: int,
    horizon: int,
    num_devices: int,
    params: BoundParams,
    threshold_override: Optional[float] = None,
) -> AlgorithmConstants:
    """Resolve gamma_min/gamma_max/kappa, beta and D for one run.

    ``sigma_t == 0`` selects the error-free instantiation (ridge regulariser
    lambda_reg, kappa = 0).
    """
    n = params.nominal_sync_rounds or default_sync_rounds(dimension, horizon, params.L)
    if sigma_t == 0:
        nb = NoiseBounds.error_free(params.lambda_reg, dimension, params.alpha, n, num_devices)
    else:
        nb = compute_noise_bounds(sigma_t, dimension, params.alpha, n, num_devices, params.C, params.c, params.gamma_floor)
    D = threshold_override if threshold_override is not None else threshold_D(horizon, dimension, nb, params.L, params.nu)
    return AlgorithmConstants(noise_bounds=nb, threshold_D=D, params=params, error_free=sigma_t == 0)


# ============================================================================
# Monte-Carlo check of the channel-noise bounds
# ============================================================================

@dataclass(frozen=True)
class ValidityReport:
    draws: int
    gamma_max_violation: float
    gamma_min_violation: float  # frequency report only
    gamma_n_violation: float
    kappa_violation: float
    bounds: NoiseBounds


def random_symmetric_noise(sigma_t: float, d: int, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """(size, d, d) symmetric matrices with i.i.d. N(0, sigma_t^2) upper-triangle entries."""
    z = rng.normal(0.0, sigma_t, size=(size, d, d))
    upper = np.triu(z)
    return upper + np.swapaxes(np.triu(z, 1), -1, -2)


def monte_carlo_validity(
    sigma_t: float,
    d: int,
    alpha: float,
    draws: int,
    rng: np.random.Generator,
    C: float = 1.0,
    c: float = 1.0,
    gamma_floor: float = 1e-3,
) -> ValidityReport:
    nb = compute_noise_bounds(sigma_t, d, alpha, 1, 1, C, c, gamma_floor)
    N = random_symmetric_noise(sigma_t, d, rng, draws)
    n = rng.normal(0.0, sigma_t, size=(draws, d))

    eigvals, eigvecs = np.linalg.eigh(N)
    abs_eig = np.abs(eigvals)
    spectral = abs_eig.max(axis=1)
    inv_norm = 1.0 / abs_eig.min(axis=1)
    proj = np.einsum("bdk,bd->bk", eigvecs, n)
    quad = np.abs((proj**2 / eigvals).sum(axis=1))
    n_norm = np.linalg.norm(n, axis=1)

    return ValidityReport(
        draws=draws,
        gamma_max_violation=float(np.mean(spectral > nb.gamma_max)),
        gamma_min_violation=float(np.mean(inv_norm > 1.0 / nb.gamma_min)),
        gamma_n_violation=float(np.mean(n_norm > nb.gamma_n)),
        kappa_violation=float(np.mean(np.sqrt(quad) > nb.kappa)),
        bounds=nb,
    )
