"""
Reinforcement-learning search over embedding sizes.
"""

from .noise import (
    GaussianNoise,
    NoiseProcess,
    OrnsteinUhlenbeckNoise,
    UniformNoise,
    make_noise,
)
from .random_walk import (
    neighbor_set,
    random_walk,
    random_walk_batch,
    select_action,
    select_actions,
    start_node,
    step_distribution,
)
from .replay_buffer import ReplayBuffer, TransitionBatch
from .state import D_MIN, compute_reward, compute_state, compute_states
from .td3 import PolicyEnsemble, SideAgent, UpdateDiagnostics, raw_action, td3_update

__all__ = [
    "GaussianNoise", "NoiseProcess", "OrnsteinUhlenbeckNoise", "UniformNoise", "make_noise",
    "neighbor_set", "random_walk", "random_walk_batch", "select_action", "select_actions",
    "start_node", "step_distribution",
    "ReplayBuffer", "TransitionBatch",
    "D_MIN", "compute_reward", "compute_state", "compute_states",
    "PolicyEnsemble", "SideAgent", "UpdateDiagnostics", "raw_action", "td3_update",
]
