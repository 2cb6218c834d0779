import math
from dataclasses import replace

import numpy as np
import pytest

from bandit.bounds import NoiseBounds
from core.config import ChannelSettings, SimConfig


def make_bounds(gamma_max, gamma_min, kappa=0.0, dimension=10, alpha=0.05, gamma_n=0.0, sigma_t=0.1):
    return NoiseBounds(
        gamma_max=gamma_max,
        gamma_min=gamma_min,
        gamma_n=gamma_n,
        kappa=kappa,
        sigma_t=sigma_t,
        failure_prob_alpha=alpha,
        const_C=1.0,
        const_c=1.0,
        dimension=dimension,
        horizon_n=1,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_cfg():
    """A few devices, short horizon: seconds per trial. Noise referenced to the cell edge."""
    return SimConfig(
        channel=ChannelSettings(snr_reference="cell_edge"),
        num_devices_M=3,
        horizon_T=40,
        dimension_d=3,
        num_actions_K=5,
        snr_db=30.0,
        trials=2,
        base_seed=7,
    )


@pytest.fixture
def error_free_cfg(small_cfg):
    return replace(small_cfg, snr_db=math.inf)
