"""
Per-entity ranking quality relative to the full-size model.
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Any, Dict, Optional, Union

import numpy as np

from src.core.errors import DataParseError
from src.models.interactions import InteractionDataset, Split

from .metrics import K_VALUES, RankingReport, evaluate_users

if TYPE_CHECKING:
    from src.recommenders.base_recommender import BaseRecommender

BASELINE_FILE = "baseline_eval.cache"
BASELINE_FORMAT = "ciess-baseline"
BASELINE_VERSION = 1
EVAL_FLOOR = 1e-6


def eval_user(u: int, recommender: "BaseRecommender", dataset: InteractionDataset) -> float:
    """Ensemble of Recall@k and NDCG@k (k in 5, 10, 20) on u's validation items"""
    report = evaluate_users(recommender, dataset, Split.VAL, K_VALUES, users=np.array([u]))
    return float(report.ensemble()[0])


def item_scores(per_user_scores: np.ndarray, dataset: InteractionDataset) -> np.ndarray:
    """Mean user score over each item's train interactors, for all items"""
    train = dataset.matrix(Split.TRAIN)
    totals = np.asarray(train.T @ np.asarray(per_user_scores, dtype=np.float64)).ravel()
    counts = np.maximum(dataset.item_popularity, 1)
    return totals / counts


def eval_item(v: int, dataset: InteractionDataset, per_user_scores: np.ndarray) -> float:
    """Mean of eval_user over the train interactors of item v"""
    interactors = dataset.users_of(v, Split.TRAIN)
    if len(interactors) == 0:
        raise ValueError(f"item {v} has no train interactions")
    return float(np.mean(np.asarray(per_user_scores)[interactors]))


def quality_q(current_eval: Union[float, np.ndarray],
              baseline_eval: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """min(current / baseline, 1) with the baseline floored at 1e-6"""
    ratio = np.minimum(
        np.asarray(current_eval, dtype=np.float64)
        / np.maximum(np.asarray(baseline_eval, dtype=np.float64), EVAL_FLOOR),
        1.0,
    )
    return float(ratio) if ratio.ndim == 0 else ratio


@dataclass
class FullEvalBaseline:
    """eval(e_n|E) of every entity under the fully trained full-size model"""
    user_eval: np.ndarray
    item_eval: np.ndarray
    metadata: Optional[Dict[str, Any]] = None

    def __post_init__(self):
        self.user_eval = np.maximum(np.asarray(self.user_eval, dtype=np.float64), EVAL_FLOOR)
        self.item_eval = np.maximum(np.asarray(self.item_eval, dtype=np.float64), EVAL_FLOOR)

    @property
    def entity_eval(self) -> np.ndarray:
        return np.concatenate([self.user_eval, self.item_eval])

    @classmethod
    def from_user_scores(cls, per_user_scores: np.ndarray, dataset: InteractionDataset,
                         metadata: Optional[Dict[str, Any]] = None) -> "FullEvalBaseline":
        return cls(per_user_scores, item_scores(per_user_scores, dataset), metadata)

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        if path.is_dir():
            path = path / BASELINE_FILE
        payload = {
            "format": BASELINE_FORMAT,
            "version": BASELINE_VERSION,
            "metadata": self.metadata or {},
            "user_eval": self.user_eval.tolist(),
            "item_eval": self.item_eval.tolist(),
        }
        path.write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "FullEvalBaseline":
        path = Path(path)
        if path.is_dir():
            path = path / BASELINE_FILE
        payload = json.loads(path.read_text(encoding="utf-8"))
        if payload.get("format") != BASELINE_FORMAT or payload.get("version") != BASELINE_VERSION:
            raise DataParseError(f"{path}: not a v{BASELINE_VERSION} baseline cache")
        return cls(np.array(payload["user_eval"]), np.array(payload["item_eval"]),
                   payload.get("metadata"))


@dataclass
class QualitySnapshot:
    """Per-entity q_n with the evaluations it was derived from"""
    q: np.ndarray
    user_eval: np.ndarray
    item_eval: np.ndarray
    report: RankingReport

    @property
    def mean_q(self) -> float:
        return float(self.q.mean())

    def metrics(self) -> Dict[str, float]:
        summary = self.report.summary()
        out = {key: summary[key] for key in ("R@5", "R@20", "N@5", "N@20")}
        out["q_mean"] = self.mean_q
        return out


def compute_quality(recommender: "BaseRecommender", dataset: InteractionDataset,
                    baseline: FullEvalBaseline) -> QualitySnapshot:
    """Validation quality of every entity, users first then items"""
    report = evaluate_users(recommender, dataset, Split.VAL, K_VALUES)
    users = report.ensemble()
    items = item_scores(users, dataset)
    q = quality_q(np.concatenate([users, items]), baseline.entity_eval)
    if not (np.all(q >= 0.0) and np.all(q <= 1.0)):
        raise AssertionError("quality indicator outside [0, 1]")
    return QualitySnapshot(q=q, user_eval=users, item_eval=items, report=report)
