"""
Top-k ranking metrics.

Single-list functions (`recall_at_k`, `ndcg_at_k`) are the reference
definitions; `evaluate_users` computes the same numbers for many users at once
from a score matrix.
"""

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Optional, Sequence, Tuple

import numpy as np

from src.models.interactions import InteractionDataset, Split

if TYPE_CHECKING:
    from src.recommenders.base_recommender import BaseRecommender

K_VALUES: Tuple[int, ...] = (5, 10, 20)
DEFAULT_CHUNK = 512


def _discounts(k: int) -> np.ndarray:
    return 1.0 / np.log2(np.arange(2, k + 2, dtype=np.float64))


def recall_at_k(ranked: Sequence[int], relevant: Iterable[int], k: int) -> float:
    """|top-k ∩ relevant| / |relevant|"""
    relevant = set(int(i) for i in relevant)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not relevant:
        raise ValueError("recall is undefined for an empty relevant set")
    hits = sum(1 for item in list(ranked)[:k] if int(item) in relevant)
    return hits / len(relevant)


def ndcg_at_k(ranked: Sequence[int], relevant: Iterable[int], k: int) -> float:
    """Binary-gain NDCG with discount 1/log2(rank + 1)"""
    relevant = set(int(i) for i in relevant)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not relevant:
        raise ValueError("NDCG is undefined for an empty relevant set")
    disc = _discounts(k)
    dcg = sum(disc[r] for r, item in enumerate(list(ranked)[:k]) if int(item) in relevant)
    idcg = disc[:min(len(relevant), k)].sum()
    return float(dcg / idcg)


def ensemble_score(recalls: Sequence[float], ndcgs: Sequence[float]) -> float:
    """Mean of Recall@k and NDCG@k over the k values"""
    if len(recalls) != len(ndcgs) or not recalls:
        raise ValueError("need one recall and one NDCG per k")
    return float((np.sum(recalls) + np.sum(ndcgs)) / (2 * len(recalls)))


@dataclass
class RankingReport:
    """
    Per-user Recall@k and NDCG@k on one split.

    Attributes:
        users: evaluated user ids
        ks: cutoffs, one column each in `recall` / `ndcg`
        valid: users with at least one relevant item
    """
    users: np.ndarray
    ks: Tuple[int, ...]
    recall: np.ndarray
    ndcg: np.ndarray
    valid: np.ndarray

    def _column(self, k: int) -> int:
        if k not in self.ks:
            raise KeyError(f"k={k} was not evaluated; have {self.ks}")
        return self.ks.index(k)

    def mean_recall(self, k: int) -> float:
        column = self.recall[self.valid, self._column(k)]
        return float(column.mean()) if len(column) else 0.0

    def mean_ndcg(self, k: int) -> float:
        column = self.ndcg[self.valid, self._column(k)]
        return float(column.mean()) if len(column) else 0.0

    def ensemble(self) -> np.ndarray:
        """Per-user ensemble score over all evaluated cutoffs"""
        return (self.recall.sum(axis=1) + self.ndcg.sum(axis=1)) / (2 * len(self.ks))

    def summary(self) -> dict:
        out = {}
        for k in self.ks:
            out[f"R@{k}"] = self.mean_recall(k)
            out[f"N@{k}"] = self.mean_ndcg(k)
        return out


def excluded_splits(split: Split) -> Tuple[Split, ...]:
    """Splits whose items are removed from the ranking when evaluating `split`"""
    if split is Split.TEST:
        return (Split.TRAIN, Split.VAL)
    return (Split.TRAIN,)


def evaluate_users(recommender: "BaseRecommender", dataset: InteractionDataset,
                   split: Split = Split.VAL, ks: Sequence[int] = K_VALUES,
                   users: Optional[np.ndarray] = None,
                   chunk: int = DEFAULT_CHUNK) -> RankingReport:
    """
    Rank all items for each user and score the top-k against `split`.

    Items of earlier splits are excluded; ties rank the smaller item id first.
    """
    ks = tuple(int(k) for k in ks)
    k_max = max(ks)
    users = np.arange(dataset.num_users) if users is None else np.asarray(users, dtype=np.int64)
    relevant_matrix = dataset.matrix(split)
    first, *rest = excluded_splits(split)
    excluded = dataset.matrix(first)
    for other in rest:
        excluded = (excluded + dataset.matrix(other)).tocsr()
    disc = _discounts(k_max)
    ideal = np.concatenate([[0.0], np.cumsum(disc)])

    recall = np.zeros((len(users), len(ks)))
    ndcg = np.zeros((len(users), len(ks)))
    n_relevant = np.asarray(relevant_matrix[users].getnnz(axis=1), dtype=np.int64)

    for start in range(0, len(users), chunk):
        block = users[start:start + chunk]
        scores = recommender.user_scores(block)
        scores[excluded[block].toarray() > 0] = -np.inf
        top = np.argsort(-scores, axis=1, kind="stable")[:, :k_max]
        hits = np.take_along_axis(relevant_matrix[block].toarray() > 0, top, axis=1)
        counts = n_relevant[start:start + len(block)]
        safe_counts = np.maximum(counts, 1)
        for j, k in enumerate(ks):
            # catalogues smaller than k rank every item
            width = min(k, hits.shape[1])
            recall[start:start + len(block), j] = hits[:, :width].sum(axis=1) / safe_counts
            dcg = hits[:, :width].astype(np.float64) @ disc[:width]
            ndcg[start:start + len(block), j] = dcg / ideal[np.clip(np.minimum(counts, k), 1, None)]

    valid = n_relevant > 0
    recall[~valid] = 0.0
    ndcg[~valid] = 0.0
    return RankingReport(users=users, ks=ks, recall=recall, ndcg=ndcg, valid=valid)
