"""
One trial of the federated protocol over the AirComp uplink.

Per round every device forms V and u~, picks the UCB action, observes a
Bernoulli reward, tests the sync event and accumulates its local deltas.
If any device fires, all devices transmit their deltas in one channel
block, the server adds the distorted sum to the previous (S, s), makes it
positive definite and broadcasts it; the new state is used from the next
round on.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from aircomp.channel import (
    ChannelBlock,
    aircomp_aggregate,
    count_deep_fades,
    draw_channel,
    nominal_sigma,
    place_devices,
)
from aircomp.payload import pack, payload_length, unpack
from aircomp.server import make_shift_policy, server_postprocess
from bandit.bounds import AlgorithmConstants, algorithm_constants, default_sync_rounds
from bandit.device import (
    DeviceState,
    SyncState,
    advance_round,
    apply_sync,
    confidence_ellipsoid,
    record_observation,
    select_action,
    sync_trigger,
)
from bandit.environment import Environment, generate_environment, instantaneous_regret, sample_reward
from core.config import SimConfig
from core.exceptions import FedBanditError, SimulationError
from core.metrics import SimMetrics


@dataclass
class TrialStreams:
    """Independent random streams of one trial.

    Rule: SeedSequence([base_seed, trial_index]) spawns environment, placement,
    fading, noise and rewards in that order; rewards spawns one child per
    device, so device i draws the same rewards whatever M is.
    """

    entropy: List[int]
    environment: np.random.SeedSequence
    placement: np.random.Generator
    fading: np.random.Generator
    noise: np.random.Generator
    rewards: List[np.random.Generator]

    @classmethod
    def derive(cls, base_seed: int, trial_index: int, num_devices: int) -> "TrialStreams":
        root = np.random.SeedSequence([base_seed, trial_index])
        env_seq, place_seq, fade_seq, noise_seq, reward_seq = root.spawn(5)
        return cls(
            entropy=[base_seed, trial_index],
            environment=env_seq,
            placement=np.random.default_rng(place_seq),
            fading=np.random.default_rng(fade_seq),
            noise=np.random.default_rng(noise_seq),
            rewards=[np.random.default_rng(s) for s in reward_seq.spawn(num_devices)],
        )


@dataclass
class RegretTrace:
    cumulative_regret: np.ndarray  # (T,), summed over devices
    sync_rounds: List[int]
    sigma_t_log: List[float]
    trial_seed: List[int]
    actions: np.ndarray  # (T, M) chosen action indices
    metrics: SimMetrics = field(default_factory=SimMetrics)

    @property
    def horizon(self) -> int:
        return int(self.cumulative_regret.shape[0])

    def sync_count_curve(self) -> np.ndarray:
        """Number of sync rounds that fired at or before each round 1..T."""
        rounds = np.arange(1, self.horizon + 1)
        return np.searchsorted(np.asarray(self.sync_rounds, dtype=int), rounds, side="right")


class TrialRunner:
    def __init__(self, cfg: SimConfig, logger: Optional[logging.Logger] = None):
        self.cfg = cfg
        self.log = logger or logging.getLogger("core.trial")
        self.channel = cfg.channel_config()
        params = cfg.bound_params
        n = params.nominal_sync_rounds or default_sync_rounds(cfg.dimension_d, cfg.horizon_T, params.L)
        self.sigma_hat = nominal_sigma(self.channel, cfg.horizon_T, n, params.L)
        self.constants: AlgorithmConstants = algorithm_constants(
            self.sigma_hat,
            cfg.dimension_d,
            cfg.horizon_T,
            cfg.num_devices_M,
            params,
            threshold_override=cfg.threshold_D,
        )
        self.shift_policy = make_shift_policy(
            cfg.channel.psd_policy, cfg.channel.psd_epsilon, r=self.constants.gamma_max
        )
        self._slot_budget = payload_length(cfg.dimension_d) * self.channel.transmit_power_P0

    def environment(self, streams: TrialStreams) -> Environment:
        cfg = self.cfg
        return generate_environment(
            cfg.dimension_d,
            cfg.num_actions_K,
            streams.environment,
            num_devices=cfg.num_devices_M,
            theta_norm_range=cfg.theta_norm_range,
            rejection_budget=cfg.rejection_budget,
        )

    def run(self, trial_index: int) -> RegretTrace:
        cfg = self.cfg
        T, M = cfg.horizon_T, cfg.num_devices_M
        streams = TrialStreams.derive(cfg.base_seed, trial_index, M)
        env = self.environment(streams)
        distances = place_devices(self.channel, M, streams.placement)

        server_state = SyncState.initial(cfg.dimension_d, self.constants.gamma_min)
        devices = [DeviceState.fresh(server_state) for _ in range(M)]
        gamma_max, gamma_min, D = self.constants.gamma_max, self.constants.gamma_min, self.constants.threshold_D

        metrics = SimMetrics()
        metrics.gamma_min_clamped = int(self.constants.noise_bounds.gamma_min_clamped)
        trace = RegretTrace(
            cumulative_regret=np.empty(T),
            sync_rounds=[],
            sigma_t_log=[],
            trial_seed=streams.entropy,
            actions=np.empty((T, M), dtype=int),
            metrics=metrics,
        )

        total = 0.0
        for t in range(1, T + 1):
            beta = self.constants.beta(t)
            fired = []
            for i, dev in enumerate(devices):
                try:
                    ell = confidence_ellipsoid(dev, beta)
                    idx, x = select_action(ell, env.action_set)
                    reward = sample_reward(env, x, streams.rewards[i], device=i, round_index=t)
                    if sync_trigger(dev, x, gamma_max, gamma_min, D):
                        fired.append(i)
                    record_observation(dev, x, reward.value)
                except FedBanditError as exc:
                    raise SimulationError(str(exc), round_index=t, device=i) from exc
                total += instantaneous_regret(env, x)
                trace.actions[t - 1, i] = idx
            trace.cumulative_regret[t - 1] = total

            if fired:
                try:
                    server_state = self._synchronize(t, fired, devices, server_state, distances, streams, trace)
                except FedBanditError as exc:
                    raise SimulationError(str(exc), round_index=t) from exc
            else:
                for dev in devices:
                    advance_round(dev)

        self.log.info(
            "Trial %d finished: regret=%.3f syncs=%d max_sigma_t=%.4g",
            trial_index,
            total,
            metrics.sync_rounds,
            metrics.max_sigma_t,
        )
        return trace

    def _synchronize(self, t, fired, devices, server_state, distances, streams, trace) -> SyncState:
        d = self.cfg.dimension_d
        metrics = trace.metrics
        payloads = [pack(dev.local_gram, dev.local_reward_vec) for dev in devices]

        h = draw_channel(self.channel, distances, streams.fading)
        fades = count_deep_fades(self.channel, h, distances)
        if fades:
            metrics.deep_fade_warnings += fades
            self.log.warning("Round %d: %d device(s) in deep fade, sigma_t will spike", t, fades)

        block = ChannelBlock.build(self.channel, h, payloads)
        metrics.observe_power(block.transmit_powers(payloads) / self._slot_budget)
        aggregated = aircomp_aggregate(self.channel, block, payloads, streams.noise)
        delta_gram, delta_vec = unpack(aggregated, d)

        raw_gram = server_state.gram + delta_gram
        new_state = server_postprocess(raw_gram, server_state.reward_vec + delta_vec, self.shift_policy)
        if not np.array_equal(new_state.gram, raw_gram):
            metrics.psd_shifts += 1

        for dev in devices:
            apply_sync(dev, new_state)

        sigma_t = block.effective_noise_std(self.channel)
        metrics.sync_rounds += 1
        metrics.max_sigma_t = max(metrics.max_sigma_t, sigma_t)
        trace.sync_rounds.append(t)
        trace.sigma_t_log.append(sigma_t)
        self.log.debug(
            "Round %d sync: fired=%s rho_t=%.4g sigma_t=%.4g",
            t,
            fired,
            block.denoising_factor,
            sigma_t,
        )
        return new_state


def run_trial(cfg: SimConfig, trial_index: int) -> RegretTrace:
    return TrialRunner(cfg).run(trial_index)
