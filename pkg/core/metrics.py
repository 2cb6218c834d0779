from typing import Dict

import numpy as np

POWER_TOL = 1e-9


class SimMetrics:
    def __init__(self):
        self.sync_rounds = 0
        self.transmissions = 0
        self.deep_fade_warnings = 0
        self.psd_shifts = 0
        self.gamma_min_clamped = 0
        self.power_violations = 0
        self.max_power_ratio = 0.0
        self.max_sigma_t = 0.0

    def reset(self):
        self.sync_rounds = 0
        self.transmissions = 0
        self.deep_fade_warnings = 0
        self.psd_shifts = 0
        self.gamma_min_clamped = 0
        self.power_violations = 0
        self.max_power_ratio = 0.0
        self.max_sigma_t = 0.0

    def observe_power(self, ratios: np.ndarray):
        """Ratios ||alpha_i p_i||^2 / (K P0) of one sync round."""
        self.transmissions += int(ratios.size)
        if ratios.size:
            self.max_power_ratio = max(self.max_power_ratio, float(ratios.max()))
            self.power_violations += int(np.sum(ratios > 1.0 + POWER_TOL))

    def merge(self, other: "SimMetrics") -> "SimMetrics":
        self.sync_rounds += other.sync_rounds
        self.transmissions += other.transmissions
        self.deep_fade_warnings += other.deep_fade_warnings
        self.psd_shifts += other.psd_shifts
        self.gamma_min_clamped += other.gamma_min_clamped
        self.power_violations += other.power_violations
        self.max_power_ratio = max(self.max_power_ratio, other.max_power_ratio)
        self.max_sigma_t = max(self.max_sigma_t, other.max_sigma_t)
        return self

    def to_dict(self) -> Dict[str, float]:
        return dict(vars(self))
