from bandit.bounds import AlgorithmConstants, BoundParams, NoiseBounds, TheoryParams, algorithm_constants
from bandit.device import ConfidenceEllipsoid, DeviceState, SyncState
from bandit.environment import Environment, RewardSample, generate_environment

__all__ = [
    "AlgorithmConstants",
    "BoundParams",
    "ConfidenceEllipsoid",
    "DeviceState",
    "Environment",
    "NoiseBounds",
    "RewardSample",
    "SyncState",
    "TheoryParams",
    "algorithm_constants",
    "generate_environment",
]
