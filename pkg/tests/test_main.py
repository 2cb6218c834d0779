import json

import pytest
import yaml

import main as cli

SMALL = {
    "simulation": {
        "num_devices_M": 2,
        "horizon_T": 20,
        "dimension_d": 3,
        "num_actions_K": 4,
        "trials": 2,
        "log_level": "WARNING",
    }
}


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(SMALL))
    return path


def test_run_writes_results(config_file, tmp_path):
    out = tmp_path / "out"
    code = cli.main(["run", "--config", str(config_file), "--out", str(out), "--sweep", "snr=30,inf", "--seed", "5"])
    assert code == 0
    lines = (out / "results.csv").read_text().splitlines()
    assert len(lines) == 1 + 2 * 20
    manifest = json.loads((out / "results_manifest.json").read_text())
    assert manifest["config"]["base_seed"] == 5


def test_overrides_applied(config_file):
    args = cli.build_parser().parse_args(["run", "--config", str(config_file), "--trials", "7", "--workers", "0"])
    from core.config import SimConfig

    cfg = cli.apply_overrides(SimConfig.load(config_file), args)
    assert cfg.trials == 7
    assert cfg.workers == 0
    assert cfg.horizon_T == 20


def test_bad_config_exits_nonzero(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text(yaml.safe_dump({"simulation": {"num_devices": 3}}))
    assert cli.main(["run", "--config", str(path), "--out", str(tmp_path)]) == 1


def test_bad_sweep_exits_nonzero(config_file, tmp_path):
    assert cli.main(["run", "--config", str(config_file), "--out", str(tmp_path), "--sweep", "k=1"]) == 1


def test_argument_errors_exit_two():
    with pytest.raises(SystemExit) as info:
        cli.main(["run", "--trials", "many"])
    assert info.value.code == 2
