"""
Random-walk action exploration.

Integer sizes form a graph where d links to every d' with 0 < |d' - d| <= t.
A walk starts at the rounded actor proposal and steps with probability
proportional to distance, so farther neighbors are more likely. The critic then
picks the best visited size.
"""

from typing import Tuple

import numpy as np

from src.utils.math_utils import round_half_away

from .td3 import SideAgent


def _check(threshold: int, d_max: int) -> None:
    if threshold < 1:
        raise ValueError(f"threshold must be >= 1, got {threshold}")
    if d_max < 2:
        raise ValueError(f"d_max={d_max} leaves every size without neighbors")


def neighbor_set(d: int, threshold: int, d_max: int) -> np.ndarray:
    """Sorted sizes d' != d with |d' - d| <= threshold inside [1, d_max]"""
    _check(threshold, d_max)
    low, high = max(1, d - threshold), min(d_max, d + threshold)
    candidates = np.arange(low, high + 1)
    return candidates[candidates != d]


def step_distribution(d: int, threshold: int, d_max: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    One-step transition probabilities from d.

    Returns:
        (neighbors, probabilities) with p(d') = |d' - d| / Σ |d'' - d|
    """
    neighbors = neighbor_set(d, threshold, d_max)
    weights = np.abs(neighbors - d).astype(np.float64)
    return neighbors, weights / weights.sum()


def start_node(d_hat: np.ndarray, d_max: int) -> np.ndarray:
    """Nearest integer (halves away from zero) clipped to [1, d_max]"""
    return np.clip(round_half_away(np.atleast_1d(d_hat)), 1, d_max).astype(np.int64)


def random_walk_batch(d_hat: np.ndarray, threshold: int, length: int, d_max: int,
                      rng: np.random.Generator) -> np.ndarray:
    """
    Independent walks for many proposals at once.

    Returns:
        (N, length + 1) integer array: the start node followed by each visited node
    """
    _check(threshold, d_max)
    if length < 1:
        raise ValueError(f"walk length must be >= 1, got {length}")
    current = start_node(d_hat, d_max)
    offsets = np.concatenate([np.arange(-threshold, 0), np.arange(1, threshold + 1)])
    walk = np.empty((len(current), length + 1), dtype=np.int64)
    walk[:, 0] = current

    for step in range(1, length + 1):
        targets = current[:, None] + offsets[None, :]
        weights = np.where((targets >= 1) & (targets <= d_max), np.abs(offsets)[None, :], 0.0)
        cumulative = np.cumsum(weights, axis=1)
        draws = rng.random(len(current)) * cumulative[:, -1]
        choice = np.minimum((cumulative <= draws[:, None]).sum(axis=1), len(offsets) - 1)
        current = targets[np.arange(len(current)), choice]
        walk[:, step] = current
    return walk


def random_walk(d_hat: float, threshold: int, length: int, d_max: int,
                rng: np.random.Generator) -> np.ndarray:
    """Candidate set Z for one proposal: start node plus `length` visited nodes"""
    return random_walk_batch(np.array([d_hat]), threshold, length, d_max, rng)[0]


def select_actions(agent: SideAgent, states: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    """
    Critic-greedy choice per row of `candidates`.

    The first critic scores every (state, candidate) pair; ties go to the smaller size.
    """
    states = np.atleast_2d(states)
    candidates = np.atleast_2d(candidates)
    n, width = candidates.shape
    q = agent.q1(np.repeat(states, width, axis=0), candidates.ravel()).reshape(n, width)
    best = q.max(axis=1, keepdims=True)
    return np.where(q == best, candidates, np.iinfo(np.int64).max).min(axis=1)


def select_action(agent: SideAgent, state: np.ndarray, candidates: np.ndarray) -> int:
    """argmax over d' in Z of Q1(state, d')"""
    candidates = np.asarray(candidates, dtype=np.int64)
    if candidates.size == 0:
        raise ValueError("candidate set is empty")
    return int(select_actions(agent, np.asarray(state)[None, :], candidates[None, :])[0])
