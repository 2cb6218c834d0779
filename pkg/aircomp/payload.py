from dataclasses import dataclass
from typing import Tuple

import numpy as np

from core.exceptions import InvalidInputError

SYMMETRY_TOL = 1e-12


def payload_length(d: int) -> int:
    """(d^2 + 3d) / 2 slots: upper triangle of U plus u."""
    return (d * d + 3 * d) // 2


@dataclass(frozen=True)
class Payload:
    slots: np.ndarray

    def __len__(self) -> int:
        return int(self.slots.shape[0])

    @property
    def energy(self) -> float:
        return float(self.slots @ self.slots)


def pack(U: np.ndarray, u: np.ndarray) -> Payload:
    U = np.asarray(U, dtype=float)
    u = np.asarray(u, dtype=float)
    d = u.shape[0]
    if U.shape != (d, d):
        raise InvalidInputError(f"gram shape {U.shape} does not match vector length {d}")
    if not np.allclose(U, U.T, rtol=0.0, atol=SYMMETRY_TOL):
        raise InvalidInputError("local gram is not symmetric")
    rows, cols = np.triu_indices(d)
    return Payload(slots=np.concatenate([U[rows, cols], u]))


def unpack(p: Payload, dimension: int) -> Tuple[np.ndarray, np.ndarray]:
    expected = payload_length(dimension)
    if len(p) != expected:
        raise InvalidInputError(f"payload has {len(p)} slots, expected {expected} for d={dimension}")
    rows, cols = np.triu_indices(dimension)
    n_tri = rows.shape[0]
    U = np.zeros((dimension, dimension))
    U[rows, cols] = p.slots[:n_tri]
    U[cols, rows] = p.slots[:n_tri]
    return U, np.array(p.slots[n_tri:], dtype=float)
