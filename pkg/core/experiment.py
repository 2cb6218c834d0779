import asyncio
import logging
import os
from concurrent.futures import Executor, ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
import pandas as pd

from bandit.bounds import AlgorithmConstants, TheoryParams, algorithm_constants
from core.config import SimConfig
from core.metrics import SimMetrics
from core.trial import RegretTrace, TrialRunner, run_trial

CSV_COLUMNS = [
    "sweep_param",
    "sweep_value",
    "round",
    "mean_cum_regret",
    "stderr_cum_regret",
    "mean_sync_count",
]


@dataclass
class SweepPointResult:
    param: str
    value: str
    config: SimConfig
    traces: List[RegretTrace]
    sigma_hat: float
    constants: AlgorithmConstants
    nominal: TheoryParams
    matched: TheoryParams

    @property
    def regret_matrix(self) -> np.ndarray:
        return np.stack([tr.cumulative_regret for tr in self.traces])

    def mean_curve(self) -> np.ndarray:
        return self.regret_matrix.mean(axis=0)

    def stderr_curve(self) -> np.ndarray:
        m = self.regret_matrix
        if m.shape[0] < 2:
            return np.zeros(m.shape[1])
        return m.std(axis=0, ddof=1) / np.sqrt(m.shape[0])

    def mean_sync_curve(self) -> np.ndarray:
        return np.stack([tr.sync_count_curve() for tr in self.traces]).mean(axis=0)

    @property
    def realized_max_sigma(self) -> float:
        return realized_max_sigma(self.traces)

    def metrics(self) -> SimMetrics:
        total = SimMetrics()
        for tr in self.traces:
            total.merge(tr.metrics)
        return total

    def frame(self) -> pd.DataFrame:
        T = self.config.horizon_T
        return pd.DataFrame(
            {
                "sweep_param": self.param,
                "sweep_value": self.value,
                "round": np.arange(1, T + 1),
                "mean_cum_regret": self.mean_curve(),
                "stderr_cum_regret": self.stderr_curve(),
                "mean_sync_count": self.mean_sync_curve(),
            },
            columns=CSV_COLUMNS,
        )


@dataclass
class ExperimentResults:
    config: SimConfig
    points: List[SweepPointResult]

    def table(self) -> pd.DataFrame:
        return pd.concat([p.frame() for p in self.points], ignore_index=True)

    def point(self, value: str) -> SweepPointResult:
        for p in self.points:
            if p.value == value:
                return p
        raise KeyError(value)


def realized_max_sigma(traces: List[RegretTrace]) -> float:
    return max((max(tr.sigma_t_log, default=0.0) for tr in traces), default=0.0)


def matched_theory(cfg: SimConfig, sigma_t: float) -> TheoryParams:
    """Regret bound with every gamma constant evaluated at the given sigma_t."""
    consts = algorithm_constants(
        sigma_t, cfg.dimension_d, cfg.horizon_T, cfg.num_devices_M, cfg.bound_params, threshold_override=cfg.threshold_D
    )
    return consts.theory(cfg.horizon_T, cfg.num_devices_M)


class ExperimentRunner:
    def __init__(self, cfg: SimConfig, logger: Optional[logging.Logger] = None):
        self.cfg = cfg
        self.log = logger or logging.getLogger("core.experiment")

    def _workers(self) -> int:
        return self.cfg.workers if self.cfg.workers > 0 else (os.cpu_count() or 1)

    async def run(self) -> ExperimentResults:
        workers = self._workers()
        executor: Optional[Executor] = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
        try:
            points = []
            for param, label, point_cfg in self.cfg.sweep_points():
                self.log.info("Sweep point %s=%s: %d trials", param, label, point_cfg.trials)
                traces = await self._run_trials(point_cfg, executor)
                points.append(self._summarize(param, label, point_cfg, traces))
        finally:
            if executor is not None:
                executor.shutdown(wait=True)
        return ExperimentResults(config=self.cfg, points=points)

    async def _run_trials(self, cfg: SimConfig, executor: Optional[Executor]) -> List[RegretTrace]:
        if executor is None:
            return [run_trial(cfg, i) for i in range(cfg.trials)]
        loop = asyncio.get_running_loop()
        futures = [loop.run_in_executor(executor, run_trial, cfg, i) for i in range(cfg.trials)]
        # gather keeps trial-index order, so the reduction matches a serial run
        return list(await asyncio.gather(*futures))

    def _summarize(self, param: str, label: str, cfg: SimConfig, traces: List[RegretTrace]) -> SweepPointResult:
        runner = TrialRunner(cfg, self.log)
        nominal = runner.constants.theory(cfg.horizon_T, cfg.num_devices_M)
        realized = realized_max_sigma(traces)
        sigma_matched = realized if realized > 0 else runner.sigma_hat
        point = SweepPointResult(
            param=param,
            value=label,
            config=cfg,
            traces=traces,
            sigma_hat=runner.sigma_hat,
            constants=runner.constants,
            nominal=nominal,
            matched=matched_theory(cfg, sigma_matched),
        )
        self.log.info(
            "Sweep point %s=%s: final mean regret %.2f (bound %.4g)",
            param,
            label,
            point.mean_curve()[-1],
            point.matched.regret_bound,
        )
        return point


def run_experiment(cfg: SimConfig) -> ExperimentResults:
    return asyncio.run(ExperimentRunner(cfg).run())
