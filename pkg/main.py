#!/usr/bin/env python3
import argparse
import asyncio
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

from core.config import SimConfig, Sweep
from core.exceptions import FedBanditError
from core.experiment import ExperimentRunner
from core.storage import emit_results
from utils.logging_setup import setup_logging

PROJECT_ROOT = Path(__file__).resolve().parent
CONFIG_PATH = PROJECT_ROOT / "config" / "config.yaml"
DEFAULT_OUT = PROJECT_ROOT / "data" / "results"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fedbandit", description="Federated linear bandit over an AirComp uplink")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte-Carlo experiment and write CSV + manifest")
    run.add_argument("--config", type=Path, default=CONFIG_PATH)
    run.add_argument("--out", type=Path, default=DEFAULT_OUT, help="output directory")
    run.add_argument("--trials", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--sweep", help="snr=25,35,50,inf | d=5,10,15 | m=10,20,30")
    run.add_argument("--workers", type=int, help="trial processes; 0 = one per CPU")
    run.add_argument("--log-level")
    return parser


def apply_overrides(cfg: SimConfig, args: argparse.Namespace) -> SimConfig:
    changes = {}
    if args.trials is not None:
        changes["trials"] = args.trials
    if args.seed is not None:
        changes["base_seed"] = args.seed
    if args.sweep:
        changes["sweep"] = Sweep.parse(args.sweep)
    if args.workers is not None:
        changes["workers"] = args.workers
    if args.log_level:
        changes["log_level"] = args.log_level
    return replace(cfg, **changes) if changes else cfg


def run(args: argparse.Namespace) -> int:
    cfg = SimConfig.load(args.config)
    cfg = apply_overrides(cfg, args)
    logger = setup_logging(cfg.log_level)
    logger.info(
        "Starting run: M=%d T=%d d=%d K=%d trials=%d seed=%d sweep=%s",
        cfg.num_devices_M,
        cfg.horizon_T,
        cfg.dimension_d,
        cfg.num_actions_K,
        cfg.trials,
        cfg.base_seed,
        cfg.sweep.param if cfg.sweep else "none",
    )
    results = asyncio.run(ExperimentRunner(cfg).run())
    emit_results(results, args.out / "results.csv")
    logger.info("Stopped")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except FedBanditError as exc:
        setup_logging()
        logging.getLogger("main").error("Run failed: %s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
