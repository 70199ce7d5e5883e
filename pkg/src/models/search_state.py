"""
RL search data model: states and transitions.
"""

from dataclasses import dataclass

import numpy as np

from src.models.interactions import Side

STATE_DIM = 3


@dataclass(frozen=True)
class SearchState:
    """
    Per-entity observation fed to the actor.

    pop_norm: popularity normalized within the entity's own side
    dim_norm: (d_n - d_min) / (d_max - d_min)
    q: quality indicator of the latest evaluation
    """
    pop_norm: float
    dim_norm: float
    q: float

    def __post_init__(self):
        for name in ("pop_norm", "dim_norm", "q"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name}={value} outside [0, 1]")

    def as_array(self) -> np.ndarray:
        return np.array([self.pop_norm, self.dim_norm, self.q], dtype=np.float64)

    @classmethod
    def from_array(cls, row: np.ndarray) -> "SearchState":
        return cls(float(row[0]), float(row[1]), float(row[2]))


@dataclass(frozen=True)
class Transition:
    """(state, action, reward, next state) record of one entity"""
    s: SearchState
    d: int
    r: float
    s_next: SearchState
    side: Side

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"action must be a positive integer, got {self.d}")
        if self.r > 1.0:
            raise ValueError(f"reward {self.r} exceeds 1")
