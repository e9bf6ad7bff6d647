"""Space-time interface fields sampled on the time grid."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError

DISPLACEMENT = "displacement"
TRACTION = "traction-load-vector"


@dataclass
class TraceSeries:
    """Interface nodal values (displacement) or load vectors (traction) per step.

    values has shape (n_steps + 1, n_if, 2) in the canonical ascending-arclength
    interface ordering.  Traction entries are dual (load) vectors: pairing with
    a nodal trace v is sum(values * v).
    """

    values: np.ndarray
    role: str = DISPLACEMENT

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 3 or self.values.shape[2] != 2:
            raise ShapeError(f"TraceSeries values must be (nt+1, n_if, 2), got {self.values.shape}")
        if self.role not in (DISPLACEMENT, TRACTION):
            raise ShapeError(f"unknown trace role {self.role!r}")

    @property
    def n_steps(self) -> int:
        return self.values.shape[0] - 1

    @property
    def n_if(self) -> int:
        return self.values.shape[1]

    def copy(self) -> "TraceSeries":
        return TraceSeries(self.values.copy(), self.role)

    def __add__(self, other: "TraceSeries") -> "TraceSeries":
        return TraceSeries(self.values + other.values, self.role)

    def __sub__(self, other: "TraceSeries") -> "TraceSeries":
        return TraceSeries(self.values - other.values, self.role)

    def __rmul__(self, c: float) -> "TraceSeries":
        return TraceSeries(c * self.values, self.role)


def zero_trace(n_steps: int, n_if: int, role: str = DISPLACEMENT) -> TraceSeries:
    return TraceSeries(np.zeros((n_steps + 1, n_if, 2)), role)
