import math

import numpy as np
import pytest

from aircomp.channel import (
    ChannelBlock,
    ChannelConfig,
    aircomp_aggregate,
    count_deep_fades,
    db_to_linear,
    dbm_to_watts,
    denoising_factor,
    draw_channel,
    nominal_sigma,
    place_devices,
)
from aircomp.payload import Payload, pack, unpack
from aircomp.server import server_postprocess
from core.exceptions import DeepFadeError, InvalidInputError


def _cfg(noise_variance=0.0, **kwargs):
    return ChannelConfig(transmit_power_P0=1.0, noise_variance=noise_variance, **kwargs)


def _ones(n=5, scale=1.0):
    return Payload(slots=np.full(n, scale))


def test_unit_conversions():
    assert dbm_to_watts(30.0) == pytest.approx(1.0)
    assert dbm_to_watts(23.0) == pytest.approx(0.19953, rel=1e-4)
    assert db_to_linear(30.0) == pytest.approx(1000.0)


def test_path_gain_at_reference_distance():
    cfg = _cfg()
    assert cfg.path_gain(1.0) == pytest.approx(math.sqrt(10**-3.35))
    assert cfg.path_gain(1.0) == pytest.approx(2.113e-2, rel=1e-3)


def test_path_gain_exponent_law():
    cfg = _cfg()
    assert cfg.path_gain(10.0) / cfg.path_gain(1.0) == pytest.approx(1e-2)


def test_small_scale_fading_unit_power():
    cfg = _cfg()
    h = draw_channel(cfg, np.ones(100_000), np.random.default_rng(3))
    power = np.abs(h) ** 2 / cfg.path_loss_G0
    # sd of the mean of Exp(1) over n draws is 1 / sqrt(n)
    assert power.mean() == pytest.approx(1.0, abs=4 / math.sqrt(100_000))


@pytest.mark.parametrize("distances", [[0.0, 10.0], [-1.0], [600.0]])
def test_draw_channel_rejects_bad_distance(distances, rng):
    with pytest.raises(InvalidInputError):
        draw_channel(_cfg(), distances, rng)


def test_place_devices_inside_cell(rng):
    cfg = _cfg()
    k = place_devices(cfg, 1000, rng)
    assert k.shape == (1000,)
    assert np.all(k > 0) and np.all(k <= cfg.cell_radius_R)
    # area-uniform: half the devices lie beyond R / sqrt(2)
    assert np.mean(k > cfg.cell_radius_R / math.sqrt(2)) == pytest.approx(0.5, abs=0.06)


def test_from_snr_transmit_reference():
    cfg = ChannelConfig.from_snr(30.0, transmit_power_dbm=30.0, snr_reference="transmit")
    assert cfg.noise_variance == pytest.approx(1e-3)
    assert cfg.snr_db == pytest.approx(30.0)


def test_from_snr_cell_edge_reference():
    cfg = ChannelConfig.from_snr(30.0, snr_reference="cell_edge")
    edge = 10**-3.35 * 500.0**-4
    assert cfg.edge_power_gain == pytest.approx(edge)
    assert cfg.noise_variance == pytest.approx(cfg.transmit_power_P0 * edge / 1000.0)
    assert cfg.snr_db == pytest.approx(30.0)


@pytest.mark.parametrize("snr", [None, math.inf])
def test_from_snr_error_free(snr):
    cfg = ChannelConfig.from_snr(snr)
    assert cfg.error_free
    assert cfg.snr == math.inf


def test_config_validation():
    with pytest.raises(InvalidInputError):
        ChannelConfig(transmit_power_P0=0.0, noise_variance=0.0)
    with pytest.raises(InvalidInputError):
        ChannelConfig(transmit_power_P0=1.0, noise_variance=-1.0)
    with pytest.raises(InvalidInputError):
        ChannelConfig(transmit_power_P0=1.0, noise_variance=0.0, snr_reference="receiver")


# ============================================================================
# denoising factor and power constraint
# ============================================================================

def test_rho_balanced_case():
    # |h|^2 = 1, K P0 = 5 = ||p||^2
    assert denoising_factor(_cfg(), np.array([1.0 + 0j]), [_ones(5)]) == pytest.approx(1.0)


def test_rho_is_min_over_devices():
    h = np.array([2.0 + 0j, 3.0j])
    assert denoising_factor(_cfg(), h, [_ones(5), _ones(5)]) == pytest.approx(4.0)


def test_power_constraint_tight_for_argmin_device(rng):
    cfg = _cfg()
    h = (rng.standard_normal(6) + 1j * rng.standard_normal(6)) * 0.1
    payloads = [Payload(slots=rng.standard_normal(9) * s) for s in (0.5, 1, 2, 3, 4, 5)]
    block = ChannelBlock.build(cfg, h, payloads)
    ratios = block.transmit_powers(payloads) / (9 * cfg.transmit_power_P0)

    assert np.all(ratios <= 1.0 + 1e-9)
    assert ratios.max() == pytest.approx(1.0, abs=1e-9)


def test_zero_payloads_do_not_drive_rho():
    h = np.array([1.0 + 0j, 0.5 + 0j])
    rho = denoising_factor(_cfg(), h, [_ones(5), Payload(slots=np.zeros(5))])
    assert rho == pytest.approx(1.0)
    assert denoising_factor(_cfg(), h, [Payload(slots=np.zeros(5))] * 2) == 1.0


def test_zero_coefficient_is_deep_fade():
    with pytest.raises(DeepFadeError):
        denoising_factor(_cfg(), np.array([0.0 + 0j, 1.0 + 0j]), [_ones(), _ones()])


def test_payload_length_mismatch():
    with pytest.raises(InvalidInputError):
        denoising_factor(_cfg(), np.array([1.0 + 0j, 1.0 + 0j]), [_ones(5), _ones(9)])


def test_count_deep_fades():
    cfg = _cfg(deep_fade_floor=1e-3)
    distances = np.ones(3)
    h = cfg.path_gain(distances) * np.array([1.0, 1e-3, 1.0])
    assert count_deep_fades(cfg, h, distances) == 1


# ============================================================================
# aggregation
# ============================================================================

def test_noiseless_aggregate_is_exact_sum(rng):
    cfg = _cfg()
    h = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    payloads = [Payload(slots=rng.standard_normal(5)) for _ in range(4)]
    block = ChannelBlock.build(cfg, h, payloads)
    out = aircomp_aggregate(cfg, block, payloads, rng)
    np.testing.assert_allclose(out.slots, sum(p.slots for p in payloads), rtol=1e-12, atol=1e-12)


def test_noiseless_sync_round_recovers_global_sums(rng):
    d, M = 4, 6
    cfg = ChannelConfig(transmit_power_P0=0.2, noise_variance=0.0)
    S = rng.standard_normal((d, d))
    S = S @ S.T + np.eye(d)
    s = rng.standard_normal(d)
    grams, vecs = [], []
    for _ in range(M):
        X = rng.standard_normal((3, d))
        grams.append(X.T @ X)
        vecs.append(X.T @ rng.random(3))
    payloads = [pack(U, u) for U, u in zip(grams, vecs)]

    h = draw_channel(cfg, place_devices(cfg, M, rng), rng)
    block = ChannelBlock.build(cfg, h, payloads)
    dU, du = unpack(aircomp_aggregate(cfg, block, payloads, rng), d)
    state = server_postprocess(S + dU, s + du)

    want_gram = S + sum(grams)
    want_vec = s + sum(vecs)
    assert np.linalg.norm(state.gram - want_gram) <= 1e-10 * np.linalg.norm(want_gram)
    assert np.linalg.norm(state.reward_vec - want_vec) <= 1e-10 * np.linalg.norm(want_vec)


def test_superposition_of_equal_payloads(rng):
    cfg = _cfg()
    p = Payload(slots=np.array([1.0, -2.0, 0.5]))
    block = ChannelBlock.build(cfg, np.array([0.3 + 0.4j, -1.0 + 0.1j]), [p, p])
    out = aircomp_aggregate(cfg, block, [p, p], rng)
    np.testing.assert_allclose(out.slots, 2 * p.slots, rtol=1e-12, atol=1e-12)


def test_aggregate_unbiased_with_predicted_variance():
    cfg = _cfg(noise_variance=0.01)
    setup = np.random.default_rng(5)
    h = setup.standard_normal(3) + 1j * setup.standard_normal(3)
    payloads = [Payload(slots=setup.standard_normal(5)) for _ in range(3)]
    block = ChannelBlock.build(cfg, h, payloads)
    sigma_t = block.effective_noise_std(cfg)
    truth = sum(p.slots for p in payloads)

    noise_rng = np.random.default_rng(6)
    draws = 10_000
    samples = np.stack([aircomp_aggregate(cfg, block, payloads, noise_rng).slots for _ in range(draws)])
    err = samples - truth

    assert np.all(np.abs(err.mean(axis=0)) <= 3 * sigma_t / 100)
    band = 3 * math.sqrt(2 / (draws - 1))
    np.testing.assert_array_less(np.abs(err.var(axis=0, ddof=1) / sigma_t**2 - 1), band)


def test_effective_noise_std():
    cfg = _cfg(noise_variance=0.04)
    block = ChannelBlock.build(cfg, np.array([2.0 + 0j]), [_ones(5)])
    assert block.denoising_factor == pytest.approx(4.0)
    assert block.effective_noise_std(cfg) == pytest.approx(0.1)


def test_nominal_sigma():
    cfg = ChannelConfig.from_snr(30.0, snr_reference="cell_edge")
    # sigma_n^2 (T/n)^2 / (g_edge P0) = (1000/50)^2 / 1000
    assert nominal_sigma(cfg, 1000, 50) == pytest.approx(math.sqrt(0.4))
    assert nominal_sigma(ChannelConfig.from_snr(math.inf), 1000, 50) == 0.0
