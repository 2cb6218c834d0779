import json
import logging
import math
import subprocess
from pathlib import Path
from typing import Any, Dict, Optional

from tenacity import Retrying, retry_if_exception_type, stop_after_attempt, wait_exponential

from core import __version__
from core.exceptions import InvalidInputError, ResultsWriteError

SNR_NOTE = (
    "SNR is treated as a sweep variable; the single fixed SNR quoted for the "
    "default setup (80 dB) disagrees with the 25/35/50 dB sweep and is not used."
)

SNR_REFERENCE_NOTES = {
    "transmit": (
        "snr_reference=transmit: sigma_n^2 = P0 / SNR. With cell-edge path gains the "
        "effective noise after denoising is orders of magnitude above the payload scale."
    ),
    "cell_edge": (
        "snr_reference=cell_edge: SNR is reinterpreted as the receive SNR of a device at the "
        "cell edge, sigma_n^2 = P0 G0 (R / k0)^(-2 zeta) / SNR, not P0 / SNR."
    ),
}

WRITE_ATTEMPTS = 3


def version_string() -> str:
    """git-describe of the working tree, or the package version outside a checkout."""
    try:
        out = subprocess.run(
            ["git", "describe", "--tags", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
            check=True,
        )
        described = out.stdout.strip()
        if described:
            return described
    except (OSError, subprocess.SubprocessError):
        pass
    return f"v{__version__}"


def _finite(value):
    if isinstance(value, float) and not math.isfinite(value):
        return "inf" if value > 0 else "-inf" if value < 0 else "nan"
    return value


class ResultStorage:
    def __init__(self, out_dir: Path, logger: Optional[logging.Logger] = None):
        self.out_dir = Path(out_dir)
        self.log = logger or logging.getLogger("core.storage")

    def _write_text(self, path: Path, text: str):
        retrying = Retrying(
            stop=stop_after_attempt(WRITE_ATTEMPTS),
            wait=wait_exponential(multiplier=0.1, min=0.1, max=1),
            retry=retry_if_exception_type(OSError),
            reraise=True,
        )
        try:
            for attempt in retrying:
                with attempt:
                    path.parent.mkdir(parents=True, exist_ok=True)
                    with open(path, "w", encoding="utf-8", newline="") as f:
                        f.write(text)
        except OSError as exc:
            raise ResultsWriteError(path, exc) from exc

    def write_csv(self, results, name: str = "results.csv") -> Path:
        path = self.out_dir / name
        text = results.table().to_csv(index=False, float_format="%.10g", lineterminator="\n")
        self._write_text(path, text)
        self.log.info("Wrote %s", path)
        return path

    def write_manifest(self, results, name: str = "manifest.json") -> Path:
        path = self.out_dir / name
        text = json.dumps(build_manifest(results), sort_keys=True, indent=2)
        self._write_text(path, text + "\n")
        self.log.info("Wrote %s", path)
        return path


def _point_summary(point) -> Dict[str, Any]:
    nominal = point.nominal
    nb = point.constants.noise_bounds
    mean = point.mean_curve()
    stderr = point.stderr_curve()
    syncs = point.mean_sync_curve()
    return {
        "sweep_param": point.param,
        "sweep_value": point.value,
        "snr_db": _finite(float(point.config.snr_db)),
        "dimension_d": point.config.dimension_d,
        "num_devices_M": point.config.num_devices_M,
        "sigma_hat": point.sigma_hat,
        "gamma_min": nb.gamma_min,
        "gamma_max": nb.gamma_max,
        "kappa": nb.kappa,
        "gamma_min_clamped": nb.gamma_min_clamped,
        "error_free": point.constants.error_free,
        "realized_max_sigma_t": point.realized_max_sigma,
        "nominal": {
            "threshold_D": _finite(float(nominal.threshold_D)),
            "beta_bar_T": nominal.beta_bar,
            "regret_bound": nominal.regret_bound,
        },
        "matched": {
            "threshold_D": _finite(float(point.matched.threshold_D)),
            "beta_bar_T": point.matched.beta_bar,
            "regret_bound": point.matched.regret_bound,
        },
        "final_mean_cum_regret": float(mean[-1]),
        "final_stderr_cum_regret": float(stderr[-1]),
        "final_mean_sync_count": float(syncs[-1]),
        "metrics": point.metrics().to_dict(),
    }


def build_manifest(results) -> Dict[str, Any]:
    cfg = results.config
    trial_seeds = [[cfg.base_seed, i] for i in range(cfg.trials)]
    return {
        "version": version_string(),
        "config": cfg.to_dict(),
        "seeds": {
            "rule": "SeedSequence([base_seed, trial_index]).spawn(5) -> environment, placement, fading, noise, rewards",
            "base_seed": cfg.base_seed,
            "trial_entropy": trial_seeds,
        },
        "notes": [SNR_NOTE, SNR_REFERENCE_NOTES[cfg.channel.snr_reference]],
        "points": [_point_summary(p) for p in results.points],
    }


def emit_results(results, path: Path, logger: Optional[logging.Logger] = None) -> Path:
    """Write the CSV at ``path`` and ``<stem>_manifest.json`` next to it."""
    if not results.points:
        raise InvalidInputError("no sweep points to write")
    path = Path(path)
    storage = ResultStorage(path.parent, logger)
    storage.write_csv(results, path.name)
    storage.write_manifest(results, f"{path.stem}_manifest.json")
    return path
