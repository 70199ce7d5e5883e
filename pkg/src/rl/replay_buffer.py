"""
Bounded FIFO replay buffer, one per side.
"""

from dataclasses import dataclass

import numpy as np

from src.models.interactions import Side
from src.models.search_state import STATE_DIM, Transition


@dataclass
class TransitionBatch:
    """Column arrays of sampled transitions"""
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray

    def __len__(self) -> int:
        return len(self.actions)


class ReplayBuffer:
    """
    Ring buffer of transitions for a single side.

    Once full, the oldest transitions are overwritten first.
    """

    def __init__(self, side: Side, capacity: int):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.side = side
        self.capacity = int(capacity)
        self._states = np.zeros((self.capacity, STATE_DIM))
        self._actions = np.zeros(self.capacity)
        self._rewards = np.zeros(self.capacity)
        self._next_states = np.zeros((self.capacity, STATE_DIM))
        self._size = 0
        self._position = 0

    def __len__(self) -> int:
        return self._size

    def _check_side(self, side: Side) -> None:
        if side is not self.side:
            raise ValueError(f"{side.value} transition offered to the {self.side.value} buffer")

    def push(self, transition: Transition) -> None:
        self._check_side(transition.side)
        self.push_batch(
            transition.s.as_array()[None, :],
            np.array([transition.d]),
            np.array([transition.r]),
            transition.s_next.as_array()[None, :],
            transition.side,
        )

    def push_batch(self, states: np.ndarray, actions: np.ndarray, rewards: np.ndarray,
                   next_states: np.ndarray, side: Side) -> None:
        """Append many transitions of one side in order"""
        self._check_side(side)
        n = len(actions)
        if not (len(states) == len(rewards) == len(next_states) == n):
            raise ValueError("transition columns differ in length")
        if n == 0:
            return
        if n > self.capacity:
            states, actions = states[-self.capacity:], actions[-self.capacity:]
            rewards, next_states = rewards[-self.capacity:], next_states[-self.capacity:]
            n = self.capacity
        slots = (self._position + np.arange(n)) % self.capacity
        self._states[slots] = states
        self._actions[slots] = actions
        self._rewards[slots] = rewards
        self._next_states[slots] = next_states
        self._position = int((self._position + n) % self.capacity)
        self._size = min(self.capacity, self._size + n)

    def sample(self, batch_size: int, rng: np.random.Generator) -> TransitionBatch:
        """Uniform sample, without replacement within the batch"""
        if batch_size > self._size:
            raise ValueError(f"cannot sample {batch_size} from {self._size} transitions")
        index = rng.choice(self._size, size=batch_size, replace=False)
        return TransitionBatch(
            states=self._states[index].copy(),
            actions=self._actions[index].copy(),
            rewards=self._rewards[index].copy(),
            next_states=self._next_states[index].copy(),
        )
