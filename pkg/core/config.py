import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import yaml

from aircomp.channel import ChannelConfig
from bandit.bounds import BoundParams
from core.exceptions import InvalidInputError

ERROR_FREE_LABELS = ("inf", "+inf", "error-free", "error_free", "errorfree", "none")

# CLI/short names -> SimConfig fields
SWEEP_PARAMS = {
    "snr": "snr_db",
    "d": "dimension_d",
    "m": "num_devices_M",
}


def parse_snr(value) -> float:
    """Number of dB, or inf for an error-free channel."""
    if value is None:
        return math.inf
    if isinstance(value, str):
        v = value.strip().lower()
        if v in ERROR_FREE_LABELS:
            return math.inf
        try:
            return float(v)
        except ValueError:
            raise InvalidInputError(f"invalid SNR value {value!r}") from None
    return float(value)


def format_sweep_value(param: str, value) -> str:
    if param == "snr":
        if math.isinf(value):
            return "error-free"
        return f"{value:g}"
    return str(value)


@dataclass(frozen=True)
class Sweep:
    param: str
    values: Tuple[Any, ...]

    def __post_init__(self):
        if self.param not in SWEEP_PARAMS:
            raise InvalidInputError(f"unknown sweep parameter {self.param!r}, expected one of {sorted(SWEEP_PARAMS)}")
        if not self.values:
            raise InvalidInputError("sweep needs at least one value")

    @classmethod
    def parse(cls, text: str) -> "Sweep":
        """'snr=25,35,50,inf' | 'd=5,10' | 'm=10,20'."""
        if "=" not in text:
            raise InvalidInputError(f"sweep must look like name=v1,v2,..., got {text!r}")
        name, raw = text.split("=", 1)
        return cls.build(name.strip().lower(), [v for v in raw.split(",") if v.strip()])

    @classmethod
    def build(cls, param: str, values) -> "Sweep":
        param = param.lower()
        if param == "snr":
            parsed = tuple(parse_snr(v) for v in values)
        else:
            try:
                parsed = tuple(int(v) for v in values)
            except (TypeError, ValueError):
                raise InvalidInputError(f"sweep values for {param!r} must be integers: {values}") from None
        return cls(param=param, values=parsed)


@dataclass(frozen=True)
class ChannelSettings:
    transmit_power_dbm: float = 23.0
    path_loss_g0_db: float = -33.5
    path_loss_exponent: float = 2.0
    reference_distance: float = 1.0
    cell_radius: float = 500.0
    snr_reference: str = "transmit"
    deep_fade_floor: float = 1e-12
    psd_policy: str = "eigen_floor"
    psd_epsilon: float = 1e-6

    def channel_config(self, snr_db: float) -> ChannelConfig:
        return ChannelConfig.from_snr(
            snr_db,
            transmit_power_dbm=self.transmit_power_dbm,
            snr_reference=self.snr_reference,
            path_loss_G0=10.0 ** (self.path_loss_g0_db / 10.0),
            path_loss_exponent_zeta=self.path_loss_exponent,
            reference_distance_k0=self.reference_distance,
            cell_radius_R=self.cell_radius,
            deep_fade_floor=self.deep_fade_floor,
        )


def _known(cls, data: Optional[dict]) -> dict:
    names = {f.name for f in fields(cls)}
    data = data or {}
    unknown = set(data) - names
    if unknown:
        raise InvalidInputError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    return dict(data)


@dataclass(frozen=True)
class SimConfig:
    num_devices_M: int = 50
    horizon_T: int = 1000
    dimension_d: int = 10
    num_actions_K: int = 20
    snr_db: float = 30.0
    channel: ChannelSettings = field(default_factory=ChannelSettings)
    bound_params: BoundParams = field(default_factory=BoundParams)
    trials: int = 100
    base_seed: int = 2024
    sweep: Optional[Sweep] = None
    workers: int = 1
    log_level: str = "INFO"
    theta_norm_range: Tuple[float, float] = (0.9, 1.0)
    rejection_budget: int = 10_000
    threshold_D: Optional[float] = None  # None: choose D from the horizon

    def __post_init__(self):
        for name in ("num_devices_M", "horizon_T", "dimension_d", "num_actions_K", "trials"):
            if getattr(self, name) < 1:
                raise InvalidInputError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.dimension_d < 2:
            raise InvalidInputError(f"dimension_d must be >= 2, got {self.dimension_d}")
        if self.workers < 0:
            raise InvalidInputError(f"workers must be >= 0, got {self.workers}")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SimConfig":
        sim = data.get("simulation", {}) or {}
        kwargs = _known(cls, {k: v for k, v in sim.items()})
        if "snr_db" in kwargs:
            kwargs["snr_db"] = parse_snr(kwargs["snr_db"])
        if "theta_norm_range" in kwargs:
            kwargs["theta_norm_range"] = tuple(kwargs["theta_norm_range"])
        if kwargs.get("threshold_D") is not None:
            kwargs["threshold_D"] = float(kwargs["threshold_D"])

        kwargs["channel"] = ChannelSettings(**_known(ChannelSettings, data.get("channel")))
        bounds = _known(BoundParams, data.get("bounds"))
        if isinstance(bounds.get("nu"), str) and bounds["nu"].lower() == "e":
            bounds["nu"] = math.e
        kwargs["bound_params"] = BoundParams(**bounds)

        sweep = data.get("sweep")
        if sweep:
            kwargs["sweep"] = Sweep.build(sweep["param"], sweep["values"])
        return cls(**kwargs)

    @classmethod
    def load(cls, path: Path) -> "SimConfig":
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = yaml.safe_load(f) or {}
        except OSError as exc:
            raise InvalidInputError(f"cannot read config {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise InvalidInputError(f"invalid YAML in {path}: {exc}") from exc
        return cls.from_dict(data)

    def channel_config(self) -> ChannelConfig:
        return self.channel.channel_config(self.snr_db)

    @property
    def error_free(self) -> bool:
        return math.isinf(self.snr_db)

    def at(self, param: str, value) -> "SimConfig":
        return replace(self, **{SWEEP_PARAMS[param]: value})

    def sweep_points(self) -> List[Tuple[str, str, "SimConfig"]]:
        """(param, label, config) per sweep point; a single 'none' point without a sweep."""
        if self.sweep is None:
            return [("none", "default", self)]
        return [(self.sweep.param, format_sweep_value(self.sweep.param, v), self.at(self.sweep.param, v)) for v in self.sweep.values]

    def to_dict(self) -> Dict[str, Any]:
        return _jsonable(asdict(self))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else "-inf" if obj < 0 else "nan"
    return obj
