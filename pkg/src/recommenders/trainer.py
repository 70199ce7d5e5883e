"""
Training to convergence with early stopping on validation NDCG@20.
"""

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from src.config.settings import RecommenderConfig
from src.evaluation.metrics import K_VALUES, evaluate_users
from src.evaluation.quality import FullEvalBaseline
from src.models.embedding import MaskedEmbeddingTable
from src.models.interactions import InteractionDataset, Split
from src.utils.logging_utils import get_logger

from .base_recommender import BaseRecommender

logger = get_logger("trainer")

EARLY_STOP_K = 20


@dataclass
class FitResult:
    """Outcome of `fit_to_convergence`"""
    best_epoch: int
    best_val_ndcg: float
    epochs_run: int
    losses: List[float] = field(default_factory=list)
    val_ndcg: List[float] = field(default_factory=list)


def fit_to_convergence(recommender: BaseRecommender, dataset: InteractionDataset,
                       max_epochs: int, patience: int, rng: np.random.Generator) -> FitResult:
    """
    Train one epoch at a time until validation NDCG@20 stops improving.

    The parameters of the best epoch are restored before returning.
    """
    best_state = recommender.get_state()
    best_score = -1.0
    best_epoch = -1
    stale = 0
    result = FitResult(best_epoch=-1, best_val_ndcg=0.0, epochs_run=0)

    for epoch in range(max_epochs):
        result.losses.extend(recommender.train_epochs(dataset, 1, rng))
        report = evaluate_users(recommender, dataset, Split.VAL, ks=(EARLY_STOP_K,))
        score = report.mean_ndcg(EARLY_STOP_K)
        result.val_ndcg.append(score)
        result.epochs_run = epoch + 1

        if score > best_score:
            best_score, best_epoch, stale = score, epoch, 0
            best_state = recommender.get_state()
        else:
            stale += 1
            if stale >= patience:
                break

    recommender.set_state(best_state)
    result.best_epoch = best_epoch
    result.best_val_ndcg = max(best_score, 0.0)
    logger.info(
        "training converged",
        backbone=recommender.backbone,
        epochs=result.epochs_run,
        best_epoch=best_epoch,
        val_ndcg20=round(result.best_val_ndcg, 6),
    )
    return result


def build_full_baseline(config: RecommenderConfig, dataset: InteractionDataset, init_seed: int,
                        rng: np.random.Generator) -> Tuple[FullEvalBaseline, BaseRecommender, FitResult]:
    """
    Train the full-size model to convergence and record eval(e_n|E) per entity.

    Returns:
        (baseline, trained recommender, fit result)
    """
    from . import create_recommender

    table = MaskedEmbeddingTable(dataset.num_users, dataset.num_items, config.d_max)
    recommender = create_recommender(config, table, dataset)
    recommender.reinit(init_seed)
    fit = fit_to_convergence(recommender, dataset, config.max_epochs, config.patience, rng)
    report = evaluate_users(recommender, dataset, Split.VAL, K_VALUES)
    baseline = FullEvalBaseline.from_user_scores(
        report.ensemble(),
        dataset,
        metadata={
            "backbone": config.backbone,
            "d_max": config.d_max,
            "best_epoch": fit.best_epoch,
            "val_ndcg20": fit.best_val_ndcg,
        },
    )
    return baseline, recommender, fit
