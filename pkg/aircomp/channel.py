"""
Uplink multiple-access channel with over-the-air aggregation.

Block flat Rayleigh fading with distance path loss, channel-inversion
precoding, a single denoising factor per sync round and additive receiver
noise. After dividing by sqrt(rho_t) the server keeps the real part; the
retained noise is N(0, sigma_n^2 / rho_t) per slot.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from aircomp.payload import Payload
from core.exceptions import DeepFadeError, InvalidInputError

logger = logging.getLogger("aircomp.channel")

SNR_REFERENCES = ("transmit", "cell_edge")


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class ChannelConfig:
    transmit_power_P0: float  # W
    noise_variance: float  # W, 0 for an error-free channel
    path_loss_G0: float = 10.0**-3.35
    path_loss_exponent_zeta: float = 2.0
    reference_distance_k0: float = 1.0  # m
    cell_radius_R: float = 500.0  # m
    snr_reference: str = "transmit"
    deep_fade_floor: float = 1e-12

    def __post_init__(self):
        positive = {
            "transmit_power_P0": self.transmit_power_P0,
            "path_loss_G0": self.path_loss_G0,
            "path_loss_exponent_zeta": self.path_loss_exponent_zeta,
            "reference_distance_k0": self.reference_distance_k0,
            "cell_radius_R": self.cell_radius_R,
        }
        for name, value in positive.items():
            if not value > 0:
                raise InvalidInputError(f"{name} must be > 0, got {value}")
        if self.noise_variance < 0:
            raise InvalidInputError(f"noise_variance must be >= 0, got {self.noise_variance}")
        if self.snr_reference not in SNR_REFERENCES:
            raise InvalidInputError(f"snr_reference must be one of {SNR_REFERENCES}, got {self.snr_reference!r}")

    @classmethod
    def from_snr(
        cls,
        snr_db: Optional[float],
        transmit_power_dbm: float = 23.0,
        snr_reference: str = "transmit",
        **kwargs,
    ) -> "ChannelConfig":
        """Derive sigma_n^2 from an SNR in dB; ``None`` or ``inf`` gives an error-free channel."""
        P0 = dbm_to_watts(transmit_power_dbm)
        probe = cls(transmit_power_P0=P0, noise_variance=0.0, snr_reference=snr_reference, **kwargs)
        if snr_db is None or math.isinf(snr_db):
            return probe
        return cls(
            transmit_power_P0=P0,
            noise_variance=probe.reference_power / db_to_linear(snr_db),
            snr_reference=snr_reference,
            **kwargs,
        )

    @property
    def error_free(self) -> bool:
        return self.noise_variance == 0

    @property
    def edge_power_gain(self) -> float:
        return self.path_loss_G0 * (self.cell_radius_R / self.reference_distance_k0) ** (-2 * self.path_loss_exponent_zeta)

    @property
    def reference_power(self) -> float:
        if self.snr_reference == "cell_edge":
            return self.transmit_power_P0 * self.edge_power_gain
        return self.transmit_power_P0

    @property
    def snr(self) -> float:
        return math.inf if self.error_free else self.reference_power / self.noise_variance

    @property
    def snr_db(self) -> float:
        return math.inf if self.error_free else 10.0 * math.log10(self.snr)

    def path_gain(self, distances) -> np.ndarray:
        """Amplitude path loss sqrt(G0) * (k / k0)^-zeta."""
        k = np.asarray(distances, dtype=float)
        return math.sqrt(self.path_loss_G0) * (k / self.reference_distance_k0) ** (-self.path_loss_exponent_zeta)


@dataclass(frozen=True)
class ChannelBlock:
    coefficients: np.ndarray  # h_i, complex
    denoising_factor: float  # rho_t
    precoders: np.ndarray  # alpha_i = sqrt(rho) h_i^H / |h_i|^2

    @classmethod
    def build(cls, cfg: ChannelConfig, coefficients: np.ndarray, payloads: Sequence[Payload]) -> "ChannelBlock":
        rho = denoising_factor(cfg, coefficients, payloads)
        logger.debug("Channel block: rho_t=%.6g over %d devices", rho, len(payloads))
        h = np.asarray(coefficients, dtype=complex)
        precoders = math.sqrt(rho) * np.conj(h) / np.abs(h) ** 2
        return cls(coefficients=h, denoising_factor=rho, precoders=precoders)

    def transmit_powers(self, payloads: Sequence[Payload]) -> np.ndarray:
        energies = np.array([p.energy for p in payloads])
        return np.abs(self.precoders) ** 2 * energies

    def effective_noise_std(self, cfg: ChannelConfig) -> float:
        """sigma_t = sigma_n / sqrt(rho_t)."""
        return math.sqrt(cfg.noise_variance / self.denoising_factor)


def place_devices(cfg: ChannelConfig, num_devices: int, rng: np.random.Generator) -> np.ndarray:
    """Distances of devices dropped uniformly over the disc of radius R."""
    k = cfg.cell_radius_R * np.sqrt(rng.random(num_devices))
    return np.maximum(k, 1e-3 * cfg.reference_distance_k0)


def draw_channel(cfg: ChannelConfig, device_distances, rng: np.random.Generator) -> np.ndarray:
    k = np.asarray(device_distances, dtype=float)
    if np.any(k <= 0):
        raise InvalidInputError("device distance must be > 0")
    if np.any(k > cfg.cell_radius_R * (1 + 1e-12)):
        raise InvalidInputError(f"device distance exceeds cell radius {cfg.cell_radius_R}")
    small_scale = (rng.standard_normal(k.shape) + 1j * rng.standard_normal(k.shape)) / math.sqrt(2.0)
    return cfg.path_gain(k) * small_scale


def count_deep_fades(cfg: ChannelConfig, coefficients: np.ndarray, device_distances) -> int:
    """Devices whose |h|^2 is below deep_fade_floor x mean path power gain."""
    floor = cfg.deep_fade_floor * float(np.mean(cfg.path_gain(device_distances) ** 2))
    return int(np.sum(np.abs(coefficients) ** 2 < floor))


def denoising_factor(cfg: ChannelConfig, coefficients: np.ndarray, payloads: Sequence[Payload]) -> float:
    """rho_t = min_i |h_i|^2 K P0 / ||p_i||^2 over devices with a nonzero payload."""
    h_sq = np.abs(np.asarray(coefficients)) ** 2
    if np.any(h_sq == 0):
        raise DeepFadeError("zero channel coefficient: channel inversion is undefined")
    lengths = {len(p) for p in payloads}
    if len(lengths) != 1:
        raise InvalidInputError(f"payloads differ in length: {sorted(lengths)}")
    n_slots = lengths.pop()

    energies = np.array([p.energy for p in payloads])
    active = energies > 0
    if not np.any(active):
        return 1.0
    return float(np.min(h_sq[active] * n_slots * cfg.transmit_power_P0 / energies[active]))


def aircomp_aggregate(
    cfg: ChannelConfig,
    block: ChannelBlock,
    payloads: Sequence[Payload],
    rng: np.random.Generator,
) -> Payload:
    slots = np.stack([p.slots for p in payloads])
    received = (block.coefficients * block.precoders) @ slots
    sqrt_rho = math.sqrt(block.denoising_factor)
    # in-phase receiver noise at the full sigma_n^2 per slot; drawn even when
    # sigma_n = 0 so noise streams stay aligned across SNR sweep points
    noise = math.sqrt(cfg.noise_variance) * rng.standard_normal(slots.shape[1])
    return Payload(slots=(received.real + noise) / sqrt_rho)


def nominal_sigma(cfg: ChannelConfig, horizon: int, sync_rounds: int, L: float = 1.0) -> float:
    """A-priori effective noise std, needed before any rho_t is realized.

    Uses the cell-edge path gain for |h|^2 and L^2 T / n as the per-slot
    payload magnitude, so rho_hat = g_edge K P0 / (K (L^2 T / n)^2).
    """
    if cfg.error_free:
        return 0.0
    per_slot = L**2 * horizon / sync_rounds
    rho_hat = cfg.edge_power_gain * cfg.transmit_power_P0 / per_slot**2
    return math.sqrt(cfg.noise_variance / rho_hat)
