"""
Search states and rewards.

A state is (popularity, current size, quality), each normalized into [0, 1].
Popularity is normalized within the entity's own side so users and items are
comparable despite very different count ranges.
"""

from typing import Union

import numpy as np

from src.models.search_state import SearchState
from src.utils.math_utils import safe_normalize

D_MIN = 1


def normalize_popularity(popularity: np.ndarray, num_users: int) -> np.ndarray:
    """Min-max popularity per side; a side with equal counts maps to 0.5"""
    popularity = np.asarray(popularity, dtype=np.float64)
    out = np.empty_like(popularity)
    for side in (slice(0, num_users), slice(num_users, len(popularity))):
        values = popularity[side]
        if len(values):
            out[side] = safe_normalize(values, values.min(), values.max())
    return out


def normalize_dims(dims: np.ndarray, d_max: int) -> np.ndarray:
    """(d - d_min) / (d_max - d_min)"""
    return safe_normalize(np.asarray(dims, dtype=np.float64), D_MIN, d_max, degenerate=1.0)


def compute_states(dims: np.ndarray, popularity: np.ndarray, quality: np.ndarray,
                   num_users: int, d_max: int) -> np.ndarray:
    """State rows (N, 3) for every entity, users first"""
    states = np.column_stack([
        normalize_popularity(popularity, num_users),
        normalize_dims(dims, d_max),
        np.clip(np.asarray(quality, dtype=np.float64), 0.0, 1.0),
    ])
    return states


def compute_state(n: int, dims: np.ndarray, popularity: np.ndarray, quality: np.ndarray,
                  num_users: int, d_max: int) -> SearchState:
    """State of a single entity n"""
    if not 0 <= n < len(dims):
        raise IndexError(f"entity {n} out of range [0, {len(dims)})")
    side = slice(0, num_users) if n < num_users else slice(num_users, len(popularity))
    side_pop = np.asarray(popularity, dtype=np.float64)[side]
    pop = safe_normalize(np.array([popularity[n]]), side_pop.min(), side_pop.max())[0]
    dim = normalize_dims(np.array([dims[n]]), d_max)[0]
    return SearchState(float(pop), float(dim), float(quality[n]))


def compute_reward(q: Union[float, np.ndarray], d: Union[int, np.ndarray], lam: float,
                   d_max: int) -> Union[float, np.ndarray]:
    """q - λ (d / d_max)²"""
    reward = np.asarray(q, dtype=np.float64) - lam * np.square(np.asarray(d, dtype=np.float64) / d_max)
    return float(reward) if reward.ndim == 0 else reward
