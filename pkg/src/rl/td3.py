"""
TD3 actor-critic over embedding sizes.

Users and items each get their own agent: one actor, twin critics and target
copies of all three. Agents share the architecture and differ only in their
parameters.

Action conventions:
    actor output a ∈ (0, 1), raw size d̂ = 1 + a (d_max - 1)
    critic input  = state ++ [(d - 1) / (d_max - 1)]
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np

from src.config.settings import TD3Config
from src.core.errors import DataParseError
from src.models.interactions import Side
from src.models.search_state import STATE_DIM
from src.nn.adam import AdamState, net_step, optimizer_for
from src.nn.dense import DenseNet, soft_update
from src.utils.logging_utils import get_logger

from .noise import NoiseProcess
from .replay_buffer import ReplayBuffer

POLICY_FILE = "policy.json"
POLICY_FORMAT = "ciess-policy"
POLICY_VERSION = 1


@dataclass
class UpdateDiagnostics:
    """Losses of one TD3 step on one side"""
    side: Side
    critic_loss: float
    actor_loss: Optional[float]
    skipped: bool = False


class SideAgent:
    """Actor, twin critics and their targets for one side"""

    def __init__(self, side: Side, d_max: int, config: TD3Config, rng: np.random.Generator):
        if d_max < 2:
            raise ValueError(f"d_max must be >= 2, got {d_max}")
        self.side = side
        self.d_max = int(d_max)
        self.config = config
        width = config.hidden_width

        self.actor = DenseNet((STATE_DIM, width, width, 1), "sigmoid", rng)
        self.critic1 = DenseNet((STATE_DIM + 1, width, width, 1), "identity", rng)
        self.critic2 = DenseNet((STATE_DIM + 1, width, width, 1), "identity", rng)
        self.actor_target = self.actor.copy()
        self.critic1_target = self.critic1.copy()
        self.critic2_target = self.critic2.copy()

        self.actor_opt = optimizer_for(self.actor, config.actor_lr)
        self.critic1_opt = optimizer_for(self.critic1, config.critic_lr)
        self.critic2_opt = optimizer_for(self.critic2, config.critic_lr)
        self.updates = 0

    # ========== Action mapping ==========

    def to_action(self, unit: np.ndarray) -> np.ndarray:
        return 1.0 + np.asarray(unit, dtype=np.float64) * (self.d_max - 1)

    def to_unit(self, action: np.ndarray) -> np.ndarray:
        return (np.asarray(action, dtype=np.float64) - 1.0) / (self.d_max - 1)

    def actor_action(self, states: np.ndarray) -> np.ndarray:
        """Noise-free d̂ for each state row"""
        return self.to_action(self.actor.predict(np.atleast_2d(states))[:, 0])

    def critic_input(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        return np.column_stack([np.atleast_2d(states), self.to_unit(actions)])

    def q1(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        """First critic's value of (state, integer or real action) pairs"""
        return self.critic1.predict(self.critic_input(states, actions))[:, 0]

    # ========== TD3 step ==========

    def update(self, buffer: ReplayBuffer, batch_size: int, rng: np.random.Generator,
               gamma: Optional[float] = None, tau: Optional[float] = None,
               policy_delay: Optional[int] = None) -> UpdateDiagnostics:
        cfg = self.config
        gamma = cfg.gamma if gamma is None else gamma
        tau = cfg.tau if tau is None else tau
        policy_delay = cfg.policy_delay if policy_delay is None else policy_delay

        batch = buffer.sample(batch_size, rng)
        n = len(batch)
        rewards = batch.rewards[:, None]

        # target policy smoothing in action units
        smoothing = np.clip(
            rng.normal(0.0, cfg.target_noise_std, size=n), -cfg.target_noise_clip, cfg.target_noise_clip
        )
        next_actions = np.clip(
            self.to_action(self.actor_target.predict(batch.next_states)[:, 0]) + smoothing,
            1.0, self.d_max,
        )
        next_input = self.critic_input(batch.next_states, next_actions)
        target_q = np.minimum(
            self.critic1_target.predict(next_input), self.critic2_target.predict(next_input)
        )
        y = rewards + gamma * target_q

        current_input = self.critic_input(batch.states, batch.actions)
        critic_loss = 0.0
        for critic, opt in ((self.critic1, self.critic1_opt), (self.critic2, self.critic2_opt)):
            q, cache = critic.forward(current_input)
            error = q - y
            critic_loss += float(np.mean(error ** 2))
            grads, _ = critic.backward(cache, 2.0 * error / n)
            net_step(critic, opt, grads)

        self.updates += 1
        actor_loss = None
        if self.updates % policy_delay == 0:
            unit, actor_cache = self.actor.forward(batch.states)
            q, critic_cache = self.critic1.forward(np.column_stack([batch.states, unit]))
            actor_loss = float(-np.mean(q))
            _, grad_input = self.critic1.backward(critic_cache, np.full_like(q, -1.0 / n))
            actor_grads, _ = self.actor.backward(actor_cache, grad_input[:, -1:])
            net_step(self.actor, self.actor_opt, actor_grads)

            soft_update(self.actor_target, self.actor, tau)
            soft_update(self.critic1_target, self.critic1, tau)
            soft_update(self.critic2_target, self.critic2, tau)

        return UpdateDiagnostics(self.side, critic_loss / 2.0, actor_loss)

    # ========== Snapshot ==========

    def networks(self) -> Dict[str, DenseNet]:
        return {
            "actor": self.actor,
            "critic1": self.critic1,
            "critic2": self.critic2,
            "actor_target": self.actor_target,
            "critic1_target": self.critic1_target,
            "critic2_target": self.critic2_target,
        }

    def to_snapshot(self) -> Dict[str, object]:
        return {
            "updates": self.updates,
            "networks": {name: net.to_snapshot() for name, net in self.networks().items()},
        }

    def load_snapshot(self, snapshot: Dict[str, object]) -> None:
        for name, net in self.networks().items():
            restored = DenseNet.from_snapshot(snapshot["networks"][name])  # type: ignore[index]
            net.set_parameters(restored.parameters())
        self.updates = int(snapshot["updates"])  # type: ignore[arg-type]
        for opt in (self.actor_opt, self.critic1_opt, self.critic2_opt):
            opt.reset()


class PolicyEnsemble:
    """The user agent and the item agent"""

    def __init__(self, d_max: int, config: TD3Config, rng: np.random.Generator):
        self.d_max = int(d_max)
        self.config = config
        self.agents: Dict[Side, SideAgent] = {
            Side.USER: SideAgent(Side.USER, d_max, config, rng),
            Side.ITEM: SideAgent(Side.ITEM, d_max, config, rng),
        }
        self.logger = get_logger(self.__class__.__name__)

    def agent(self, side: Side) -> SideAgent:
        return self.agents[side]

    def raw_actions(self, side: Side, states: np.ndarray, noise: Optional[NoiseProcess],
                    rng: np.random.Generator) -> np.ndarray:
        """Noisy actor actions d̂ in [1, d_max], one per state row"""
        actions = self.agent(side).actor_action(states)
        if noise is not None:
            actions = actions + noise.sample(len(actions), rng)
        return np.clip(actions, 1.0, self.d_max)

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        if path.is_dir():
            path = path / POLICY_FILE
        payload = {
            "format": POLICY_FORMAT,
            "version": POLICY_VERSION,
            "d_max": self.d_max,
            "agents": {side.value: agent.to_snapshot() for side, agent in self.agents.items()},
        }
        path.write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")
        return path

    def load(self, path: Union[str, Path]) -> None:
        path = Path(path)
        if path.is_dir():
            path = path / POLICY_FILE
        payload = json.loads(path.read_text(encoding="utf-8"))
        if payload.get("format") != POLICY_FORMAT or payload.get("version") != POLICY_VERSION:
            raise DataParseError(f"{path}: not a v{POLICY_VERSION} policy file")
        if payload["d_max"] != self.d_max:
            raise DataParseError(f"{path}: d_max {payload['d_max']} != {self.d_max}")
        for side, agent in self.agents.items():
            agent.load_snapshot(payload["agents"][side.value])


def raw_action(agent: SideAgent, state: np.ndarray, noise: Optional[NoiseProcess],
               rng: np.random.Generator) -> float:
    """Noisy size proposal for a single state"""
    action = agent.actor_action(np.asarray(state)[None, :])[0]
    if noise is not None:
        action += noise.sample(1, rng)[0]
    return float(np.clip(action, 1.0, agent.d_max))


def td3_update(buffer: ReplayBuffer, ensemble: PolicyEnsemble, batch_size: int, gamma: float,
               tau: float, policy_delay: int, rng: np.random.Generator) -> UpdateDiagnostics:
    """
    One TD3 step for the side the buffer belongs to.

    Skipped (with a notice) while the buffer holds fewer than `batch_size` transitions.
    """
    if len(buffer) < batch_size:
        ensemble.logger.info(
            "td3 update skipped", side=buffer.side.value, buffer_len=len(buffer), batch_size=batch_size
        )
        return UpdateDiagnostics(buffer.side, float("nan"), None, skipped=True)
    return ensemble.agent(buffer.side).update(buffer, batch_size, rng, gamma, tau, policy_delay)
