import math
from pathlib import Path

import pytest

from core.config import SimConfig, Sweep, parse_snr
from core.exceptions import InvalidInputError

CONFIG_PATH = Path(__file__).resolve().parents[1] / "config" / "config.yaml"


def test_shipped_config_has_defaults():
    cfg = SimConfig.load(CONFIG_PATH)
    assert (cfg.num_devices_M, cfg.horizon_T, cfg.dimension_d) == (50, 1000, 10)
    assert cfg.trials == 100
    assert cfg.bound_params.nu == math.e
    assert cfg.channel.cell_radius == 500
    assert cfg.channel.path_loss_g0_db == -33.5
    assert cfg.threshold_D is None
    assert cfg.sweep is None


def test_shipped_config_channel():
    ch = SimConfig.load(CONFIG_PATH).channel_config()
    assert ch.path_loss_G0 == pytest.approx(10**-3.35)
    assert ch.transmit_power_P0 == pytest.approx(10 ** ((23 - 30) / 10))
    assert ch.snr_db == pytest.approx(30.0)


def test_missing_sections_fall_back_to_defaults():
    cfg = SimConfig.from_dict({"simulation": {"horizon_T": 200}})
    assert cfg.horizon_T == 200
    assert cfg.num_devices_M == 50
    assert cfg.channel.snr_reference == "transmit"


def test_unknown_key_rejected():
    with pytest.raises(InvalidInputError):
        SimConfig.from_dict({"simulation": {"num_device": 3}})
    with pytest.raises(InvalidInputError):
        SimConfig.from_dict({"channel": {"radius": 3}})


def test_load_missing_file(tmp_path):
    with pytest.raises(InvalidInputError):
        SimConfig.load(tmp_path / "nope.yaml")


def test_load_invalid_yaml(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("simulation: [unclosed\n")
    with pytest.raises(InvalidInputError):
        SimConfig.load(path)


@pytest.mark.parametrize("field", ["num_devices_M", "horizon_T", "trials"])
def test_nonpositive_sizes_rejected(field):
    with pytest.raises(InvalidInputError):
        SimConfig(**{field: 0})


@pytest.mark.parametrize("raw", ["inf", "error-free", None, "INF"])
def test_error_free_snr_labels(raw):
    assert math.isinf(parse_snr(raw))


def test_yaml_snr_error_free():
    cfg = SimConfig.from_dict({"simulation": {"snr_db": "error-free"}})
    assert cfg.error_free
    assert cfg.channel_config().error_free


def test_sweep_parse_snr():
    sweep = Sweep.parse("snr=25,35,50,inf")
    assert sweep.param == "snr"
    assert sweep.values == (25.0, 35.0, 50.0, math.inf)


def test_sweep_parse_integers():
    assert Sweep.parse("d=5,10,15").values == (5, 10, 15)
    assert Sweep.parse("M=10,20").param == "m"


@pytest.mark.parametrize("text", ["snr", "k=1,2", "d=", "d=1.5"])
def test_sweep_parse_errors(text):
    with pytest.raises(InvalidInputError):
        Sweep.parse(text)


def test_sweep_points():
    cfg = SimConfig(sweep=Sweep.parse("snr=25,inf"))
    points = cfg.sweep_points()
    assert [(p, label) for p, label, _ in points] == [("snr", "25"), ("snr", "error-free")]
    assert points[0][2].snr_db == 25.0
    assert points[1][2].error_free


def test_no_sweep_single_point():
    cfg = SimConfig()
    assert cfg.sweep_points() == [("none", "default", cfg)]


def test_dimension_sweep_changes_only_dimension():
    cfg = SimConfig(sweep=Sweep.parse("d=5,20"))
    dims = [c.dimension_d for _, _, c in cfg.sweep_points()]
    assert dims == [5, 20]
    assert all(c.num_devices_M == 50 for _, _, c in cfg.sweep_points())


def test_sweep_from_yaml():
    cfg = SimConfig.from_dict({"sweep": {"param": "m", "values": [10, 20]}})
    assert cfg.sweep == Sweep(param="m", values=(10, 20))


def test_to_dict_is_json_safe():
    import json

    cfg = SimConfig(snr_db=math.inf, sweep=Sweep.parse("snr=30,inf"))
    data = cfg.to_dict()
    assert data["snr_db"] == "inf"
    assert data["sweep"]["values"] == [30.0, "inf"]
    json.dumps(data)


def test_default_snr_is_transmit_referenced():
    ch = SimConfig().channel_config()
    assert ch.snr_reference == "transmit"
    assert ch.noise_variance == pytest.approx(ch.transmit_power_P0 / 1000.0)


def test_cell_edge_reference_is_opt_in():
    cfg = SimConfig.from_dict({"channel": {"snr_reference": "cell_edge"}})
    ch = cfg.channel_config()
    assert ch.noise_variance == pytest.approx(ch.transmit_power_P0 * ch.edge_power_gain / 1000.0)
