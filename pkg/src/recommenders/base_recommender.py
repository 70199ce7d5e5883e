"""
Base recommender over a masked embedding table.

Subclasses only define how the masked layer-0 table turns into the final user
and item representations (and the matching backward pass). Scoring, BPR
training, ranking and checkpoints live here.
"""

import json
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from src.config.settings import RecommenderConfig
from src.core.errors import DataParseError, NonFiniteError
from src.data.corpus import sample_bpr_batch
from src.models.embedding import MaskedEmbeddingTable
from src.models.interactions import InteractionDataset, Split
from src.nn.adam import AdamState, adam_step
from src.utils.logging_utils import get_logger
from src.utils.math_utils import log_sigmoid, sigmoid

CHECKPOINT_FORMAT = "ciess-checkpoint"
CHECKPOINT_VERSION = 1


class BaseRecommender(ABC):
    """
    Base class for all backbones.

    Args:
        table: masked embedding table holding Θ; its dims are set by the caller
        config: recommender hyperparameters
        dataset: interactions whose train split is used for sampling and graphs
    """

    backbone: str = ""

    def __init__(self, table: MaskedEmbeddingTable, config: RecommenderConfig,
                 dataset: InteractionDataset):
        if table.num_users != dataset.num_users or table.num_items != dataset.num_items:
            raise ValueError(
                f"table is {table.num_users}x{table.num_items}, dataset is "
                f"{dataset.num_users}x{dataset.num_items}"
            )
        self.table = table
        self.config = config
        self.dataset = dataset
        self.optimizer = AdamState.for_params([table.values], lr=config.resolved_learning_rate())
        self.logger = get_logger(self.__class__.__name__)

        self._version = 0
        self._cache_key: Optional[Tuple[int, int, int]] = None
        self._cache: Optional[Tuple[np.ndarray, np.ndarray]] = None

    # ========== Representations ==========

    @abstractmethod
    def propagate(self, layer0: np.ndarray) -> np.ndarray:
        """Map masked layer-0 embeddings (N, d_max) to final embeddings (N, d_max)"""

    @abstractmethod
    def propagate_grad(self, grad_final: np.ndarray) -> np.ndarray:
        """Pull a gradient w.r.t. final embeddings back to layer-0 embeddings"""

    def touch(self) -> None:
        """Invalidate cached representations after an in-place change"""
        self._version += 1

    def final_embeddings(self) -> Tuple[np.ndarray, np.ndarray]:
        """(user representations (U, d_max), item representations (V, d_max))"""
        key = (self._version, id(self.table.values), id(self.table.dims))
        if self._cache is None or self._cache_key != key:
            final = self.propagate(self.table.masked_values())
            nu = self.table.num_users
            self._cache = (final[:nu], final[nu:])
            self._cache_key = key
        return self._cache

    # ========== Scoring ==========

    def score(self, u: int, v: int) -> float:
        """Preference score ŷ_uv"""
        if not 0 <= u < self.table.num_users:
            raise IndexError(f"user {u} out of range [0, {self.table.num_users})")
        if not 0 <= v < self.table.num_items:
            raise IndexError(f"item {v} out of range [0, {self.table.num_items})")
        users, items = self.final_embeddings()
        return float(users[u] @ items[v])

    def user_scores(self, users: np.ndarray) -> np.ndarray:
        """Scores of every item for each given user, shape (len(users), V)"""
        user_emb, item_emb = self.final_embeddings()
        return user_emb[np.asarray(users, dtype=np.int64)] @ item_emb.T

    def rank_items(self, u: int, k: int, exclude: Optional[np.ndarray] = None) -> np.ndarray:
        """
        Top-k items for user u by descending score.

        The user's train items are always excluded; `exclude` adds more. Ties
        are broken by ascending item id.
        """
        if not 0 <= u < self.table.num_users:
            raise IndexError(f"user {u} out of range [0, {self.table.num_users})")
        scores = self.user_scores(np.array([u]))[0]
        banned = self.dataset.items_of(u, Split.TRAIN)
        if exclude is not None:
            banned = np.union1d(banned, np.asarray(exclude, dtype=np.int64))
        candidates = np.setdiff1d(np.arange(self.table.num_items), banned)
        order = np.argsort(-scores[candidates], kind="stable")
        return candidates[order][:k]

    # ========== BPR ==========

    def bpr_loss_and_grad(self, users: np.ndarray, positives: np.ndarray,
                          negatives: np.ndarray) -> Tuple[float, np.ndarray]:
        """
        Mean BPR loss of a batch and its gradient w.r.t. the full value matrix.

        loss = mean(-ln σ(ŷ_uv - ŷ_uv')) + γ * mean(|e_u|² + |e_v|² + |e_v'|²)
        where e are masked layer-0 rows. Masked positions get zero gradient.
        """
        nu = self.table.num_users
        users = np.asarray(users, dtype=np.int64)
        pos_ent = np.asarray(positives, dtype=np.int64) + nu
        neg_ent = np.asarray(negatives, dtype=np.int64) + nu
        batch = len(users)

        layer0 = self.table.masked_values()
        final = self.propagate(layer0)
        e_u, e_p, e_n = final[users], final[pos_ent], final[neg_ent]
        x = np.einsum("ij,ij->i", e_u, e_p - e_n)

        gamma = self.config.l2_weight
        r_u, r_p, r_n = layer0[users], layer0[pos_ent], layer0[neg_ent]
        reg = (np.square(r_u).sum() + np.square(r_p).sum() + np.square(r_n).sum()) / batch
        loss = float(-np.mean(log_sigmoid(x)) + gamma * reg)

        # d(-ln σ(x))/dx = -σ(-x)
        dx = (-sigmoid(-x) / batch)[:, None]
        grad_final = np.zeros_like(final)
        np.add.at(grad_final, users, dx * (e_p - e_n))
        np.add.at(grad_final, pos_ent, dx * e_u)
        np.add.at(grad_final, neg_ent, -dx * e_u)

        grad = self.propagate_grad(grad_final)
        scale = 2.0 * gamma / batch
        np.add.at(grad, users, scale * r_u)
        np.add.at(grad, pos_ent, scale * r_p)
        np.add.at(grad, neg_ent, scale * r_n)
        grad *= self.table.prefix_mask()
        return loss, grad

    def train_epochs(self, dataset: InteractionDataset, epochs: int,
                     rng: np.random.Generator) -> List[float]:
        """
        Run `epochs` passes of |train| sampled BPR triples each.

        Returns:
            Mean loss per epoch
        """
        mask = self.table.prefix_mask()
        # dims may have changed since the last call; stale moments must not move masked values
        self.optimizer.m[0] *= mask
        self.optimizer.v[0] *= mask

        n_train = len(dataset.train)
        batch_size = self.config.batch_size
        trace = []
        for epoch in range(epochs):
            total, seen, remaining, step = 0.0, 0, n_train, 0
            while remaining > 0:
                size = min(batch_size, remaining)
                users, pos, neg = sample_bpr_batch(dataset, size, rng)
                loss, grad = self.bpr_loss_and_grad(users, pos, neg)
                if not np.isfinite(loss):
                    raise NonFiniteError(
                        f"{self.backbone}: non-finite BPR loss at epoch {epoch}, step {step}"
                    )
                adam_step(self.optimizer, [self.table.values], [grad])
                self.touch()
                total += loss * size
                seen += size
                remaining -= size
                step += 1
            trace.append(total / max(seen, 1))
            self.logger.debug("epoch finished", epoch=epoch, loss=trace[-1])
        return trace

    # ========== Lifecycle ==========

    def reinit(self, seed: int) -> None:
        """Fresh parameter draw; dims are preserved"""
        self.table.init_values(seed, self.config.init_scale)
        self.optimizer = AdamState.for_params(
            [self.table.values], lr=self.config.resolved_learning_rate()
        )
        self.touch()

    def set_dims(self, dims: np.ndarray) -> None:
        self.table.set_dims(dims)
        self.touch()

    def get_state(self) -> Dict[str, np.ndarray]:
        return {"values": self.table.values.copy(), "dims": self.table.dims.copy()}

    def set_state(self, state: Dict[str, np.ndarray]) -> None:
        self.table.values = np.array(state["values"], dtype=np.float64)
        self.table.set_dims(state["dims"])
        self.touch()

    # ========== Checkpoints ==========

    def save_checkpoint(self, path: Union[str, Path]) -> Path:
        """Write values, dims and config under a versioned header (.npz)"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        header = {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "backbone": self.backbone,
            "num_users": self.table.num_users,
            "num_items": self.table.num_items,
            "d_max": self.table.d_max,
            "config": self.config.model_dump(mode="json"),
        }
        with open(path, "wb") as f:
            np.savez(f, header=np.array(json.dumps(header, sort_keys=True)),
                     values=self.table.values, dims=self.table.dims)
        return path

    def load_checkpoint(self, path: Union[str, Path]) -> Dict[str, Any]:
        """Restore values and dims from `save_checkpoint` output; returns the header"""
        with np.load(path, allow_pickle=False) as data:
            header = json.loads(str(data["header"]))
            if header.get("format") != CHECKPOINT_FORMAT or header.get("version") != CHECKPOINT_VERSION:
                raise DataParseError(f"{path}: not a v{CHECKPOINT_VERSION} checkpoint")
            if header.get("backbone") != self.backbone:
                raise DataParseError(
                    f"{path}: checkpoint backbone {header.get('backbone')!r} != {self.backbone!r}"
                )
            values = data["values"]
            dims = data["dims"]
        if values.shape != self.table.values.shape:
            raise DataParseError(f"{path}: values shape {values.shape} != {self.table.values.shape}")
        self.set_state({"values": values, "dims": dims})
        return header
