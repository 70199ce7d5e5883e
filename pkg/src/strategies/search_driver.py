"""
Embedding size search driver.

Each episode starts from full-size embeddings. Every iteration the actors
propose a size per user and item, random walks widen the proposals, the first
critic picks one, a freshly initialized recommender is trained briefly with
those sizes, and the resulting quality feeds rewards, next states and the TD3
updates. Assignments seen along the way are offered to the candidate sets.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from src.config.settings import RunConfig
from src.core.errors import NonFiniteError
from src.core.event_bus import (
    CANDIDATE_ADMITTED,
    EPISODE_COMPLETED,
    ITERATION_ABORTED,
    ITERATION_COMPLETED,
    EventBus,
)
from src.evaluation.quality import FullEvalBaseline, compute_quality
from src.models.candidates import CandidateTracker
from src.models.embedding import MaskedEmbeddingTable
from src.models.interactions import InteractionDataset, Side
from src.recommenders import BaseRecommender, create_recommender
from src.rl.noise import NoiseProcess, make_noise
from src.rl.random_walk import random_walk_batch, select_actions, start_node
from src.rl.replay_buffer import ReplayBuffer
from src.rl.state import compute_reward, compute_states
from src.rl.td3 import PolicyEnsemble, td3_update
from src.utils.logging_utils import get_logger
from src.utils.math_utils import check_finite
from src.utils.random_utils import RandomStreams


@dataclass
class RunLog:
    """Per-iteration trace records and per-episode summaries of one search"""
    iterations: List[Dict[str, Any]] = field(default_factory=list)
    episodes: List[Dict[str, Any]] = field(default_factory=list)
    aborted: List[Dict[str, Any]] = field(default_factory=list)

    def rewards(self) -> List[float]:
        return [record["mean_reward"] for record in self.iterations]


@dataclass
class SearchResult:
    tracker: CandidateTracker
    log: RunLog
    ensemble: PolicyEnsemble


def _mean_or_none(values: List[float]) -> Optional[float]:
    return float(np.mean(values)) if values else None


class SearchDriver:
    """
    Runs the episodes of one search.

    Args:
        dataset: prepared interactions
        config: resolved run configuration
        baseline: full-size evaluation cache
        event_bus: receives iteration, episode and candidate events
    """

    def __init__(self, dataset: InteractionDataset, config: RunConfig,
                 baseline: FullEvalBaseline, event_bus: Optional[EventBus] = None):
        self.dataset = dataset
        self.config = config
        self.search = config.search
        self.baseline = baseline
        self.event_bus = event_bus or EventBus()
        self.streams = RandomStreams(config.seed)
        self.logger = get_logger(self.__class__.__name__)

        self.d_max = config.recommender.d_max
        self.num_users = dataset.num_users
        self.sides = {
            Side.USER: slice(0, dataset.num_users),
            Side.ITEM: slice(dataset.num_users, dataset.num_entities),
        }
        self.popularity = dataset.popularity.astype(np.float64)

        self.ensemble = PolicyEnsemble(self.d_max, config.td3, self.streams.generator("policy"))
        self.buffers = {side: ReplayBuffer(side, config.td3.buffer_capacity) for side in Side}
        self.noise: Dict[Side, NoiseProcess] = {side: make_noise(self.search.noise) for side in Side}
        self.tracker = CandidateTracker(
            self.search.target_sparsities, self.search.top_l, self.search.candidate_window
        )
        self.log = RunLog()

        self.table = MaskedEmbeddingTable(dataset.num_users, dataset.num_items, self.d_max)
        self.recommender: BaseRecommender = create_recommender(config.recommender, self.table, dataset)

    @property
    def updates_per_iteration(self) -> int:
        td3 = self.config.td3
        return min(math.ceil(self.dataset.num_entities / td3.batch_size), td3.max_updates_per_iteration)

    # ========== Actions ==========

    def choose_actions(self, states: np.ndarray, episode: int, iteration: int) -> np.ndarray:
        """Integer sizes for every entity: noisy actor, random walk, critic-greedy pick"""
        dims = np.empty(self.dataset.num_entities, dtype=np.int64)
        walk = self.search.walk
        for side, part in self.sides.items():
            rng = self.streams.generator(f"actions.{side.value}", episode, iteration)
            raw = self.ensemble.raw_actions(side, states[part], self.noise[side], rng)
            if walk.enabled:
                candidates = random_walk_batch(raw, walk.threshold, walk.length, self.d_max, rng)
                dims[part] = select_actions(self.ensemble.agent(side), states[part], candidates)
            else:
                dims[part] = start_node(raw, self.d_max)
        return dims

    # ========== Iteration ==========

    def _train_and_evaluate(self, dims: np.ndarray, episode: int, iteration: int):
        self.recommender.set_dims(dims)
        if iteration == 0 or not self.search.warm_start:
            self.recommender.reinit(self.streams.seed("recommender.init", episode, iteration))
        losses = self.recommender.train_epochs(
            self.dataset, self.search.epochs_per_iter,
            self.streams.generator("recommender.train", episode, iteration),
        )
        quality = compute_quality(self.recommender, self.dataset, self.baseline)
        if not check_finite(quality.q, np.asarray(losses)):
            raise NonFiniteError(f"non-finite quality at episode {episode}, iteration {iteration}")
        return losses, quality

    def _optimize_policy(self, episode: int, iteration: int) -> Dict[str, Optional[float]]:
        td3 = self.config.td3
        critic_losses, actor_losses = [], []
        for side in Side:
            rng = self.streams.generator(f"td3.{side.value}", episode, iteration)
            for _ in range(self.updates_per_iteration):
                diag = td3_update(self.buffers[side], self.ensemble, td3.batch_size, td3.gamma,
                                  td3.tau, td3.policy_delay, rng)
                if diag.skipped:
                    break
                critic_losses.append(diag.critic_loss)
                if diag.actor_loss is not None:
                    actor_losses.append(diag.actor_loss)
        return {"critic_loss": _mean_or_none(critic_losses), "actor_loss": _mean_or_none(actor_losses)}

    def run_iteration(self, episode: int, iteration: int, dims: np.ndarray,
                      states: np.ndarray) -> Optional[Dict[str, Any]]:
        """
        One search step. Returns the trace record, or None when the step was
        aborted for numeric failure (no transitions are stored then).
        """
        actions = self.choose_actions(states, episode, iteration)
        try:
            losses, quality = self._train_and_evaluate(actions, episode, iteration)
        except NonFiniteError as e:
            self.recommender.set_dims(dims)
            # weights may hold NaN; a warm-started next iteration would inherit them
            self.recommender.reinit(self.streams.seed("recommender.recover", episode, iteration))
            record = {"episode": episode, "iter": iteration, "error": str(e)}
            self.log.aborted.append(record)
            self.logger.warning("iteration aborted", episode=episode, iteration=iteration, error=str(e))
            self.event_bus.publish(ITERATION_ABORTED, record, source="search")
            return None

        rewards = compute_reward(quality.q, actions, self.search.lambda_, self.d_max)
        next_states = compute_states(actions, self.popularity, quality.q, self.num_users, self.d_max)
        for side, part in self.sides.items():
            self.buffers[side].push_batch(states[part], actions[part].astype(np.float64),
                                          rewards[part], next_states[part], side)
        policy = self._optimize_policy(episode, iteration)

        sparsity = self.table.sparsity()
        admitted = self.tracker.offer(actions, quality.mean_q, sparsity, episode, iteration)
        for c in admitted:
            self.event_bus.publish(
                CANDIDATE_ADMITTED,
                {"c": c, "episode": episode, "iter": iteration, "q_mean": quality.mean_q,
                 "sparsity": sparsity},
                source="search",
            )

        record: Dict[str, Any] = {
            "episode": episode,
            "iter": iteration,
            "mean_action_users": float(actions[self.sides[Side.USER]].mean()),
            "mean_action_items": float(actions[self.sides[Side.ITEM]].mean()),
            "mean_reward": float(rewards.mean()),
            "critic_loss": policy["critic_loss"],
            "actor_loss": policy["actor_loss"],
            "buffer_len": {side.value: len(self.buffers[side]) for side in Side},
            "q_mean": quality.mean_q,
            "sparsity": sparsity,
            "train_loss": float(losses[-1]) if losses else None,
        }
        metrics = {"iteration": len(self.log.iterations), "episode": episode, "iter": iteration,
                   "scope": "all", "sparsity": sparsity, **quality.metrics()}
        self.log.iterations.append(record)
        self.event_bus.publish(ITERATION_COMPLETED, {"trace": record, "metrics": metrics},
                               source="search")
        return {"record": record, "dims": actions, "states": next_states}

    # ========== Episodes ==========

    def run_episode(self, episode: int) -> Dict[str, Any]:
        for noise in self.noise.values():
            noise.reset()
        dims = np.full(self.dataset.num_entities, self.d_max, dtype=np.int64)
        quality = np.ones(self.dataset.num_entities)
        states = compute_states(dims, self.popularity, quality, self.num_users, self.d_max)

        records = []
        for iteration in range(self.search.iterations_per_episode):
            step = self.run_iteration(episode, iteration, dims, states)
            if step is None:
                continue
            records.append(step["record"])
            dims, states = step["dims"], step["states"]

        summary = {
            "episode": episode,
            "iterations": len(records),
            "mean_reward": _mean_or_none([r["mean_reward"] for r in records]),
            "mean_action_users": _mean_or_none([r["mean_action_users"] for r in records]),
            "mean_action_items": _mean_or_none([r["mean_action_items"] for r in records]),
            "best_q_mean": max((r["q_mean"] for r in records), default=None),
            "sparsity": records[-1]["sparsity"] if records else None,
        }
        self.log.episodes.append(summary)
        self.event_bus.publish(EPISODE_COMPLETED, summary, source="search")
        self.logger.info("episode completed", **summary)
        return summary

    def run(self) -> SearchResult:
        self.logger.info(
            "search started",
            episodes=self.search.episodes,
            iterations=self.search.iterations_per_episode,
            entities=self.dataset.num_entities,
            noise=self.search.noise.kind,
            random_walk=self.search.walk.enabled,
        )
        for episode in range(self.search.episodes):
            self.run_episode(episode)
        return SearchResult(tracker=self.tracker, log=self.log, ensemble=self.ensemble)


def run_search(dataset: InteractionDataset, config: RunConfig, baseline: FullEvalBaseline,
               event_bus: Optional[EventBus] = None) -> SearchResult:
    """Run every episode and return the candidate sets with the run log"""
    return SearchDriver(dataset, config, baseline, event_bus).run()
