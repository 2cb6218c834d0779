from typing import Optional


class FedBanditError(Exception):
    """Base class for all simulator errors."""


class InvalidInputError(FedBanditError, ValueError):
    """Caller passed something that violates an operation's precondition."""


class EnvironmentGenerationError(FedBanditError):
    pass


class CorruptedSyncStateError(FedBanditError):
    """A Gram matrix that must be positive definite is not."""


class DeepFadeError(FedBanditError):
    pass


class SimulationError(FedBanditError):
    def __init__(self, message: str, round_index: Optional[int] = None, device: Optional[int] = None):
        self.round_index = round_index
        self.device = device
        where = []
        if round_index is not None:
            where.append(f"round={round_index}")
        if device is not None:
            where.append(f"device={device}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(f"{message}{suffix}")


class ResultsWriteError(FedBanditError):
    def __init__(self, path, cause: Exception):
        self.path = path
        super().__init__(f"Failed to write {path}: {cause}")
