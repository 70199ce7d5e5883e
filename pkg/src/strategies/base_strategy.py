"""
Base class for embedding size strategies.

A strategy proposes one or more dimension assignments for a target sparsity;
each assignment is then trained from scratch to convergence and scored. The
search-based strategy and the ES/MR baselines only differ in how they propose.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from src.config.settings import RecommenderConfig
from src.evaluation.metrics import K_VALUES, evaluate_users
from src.evaluation.quality import FullEvalBaseline, compute_quality
from src.models.embedding import MaskedEmbeddingTable
from src.models.interactions import InteractionDataset, Split
from src.recommenders import BaseRecommender, create_recommender, fit_to_convergence
from src.utils.async_utils import run_bounded
from src.utils.logging_utils import get_logger
from src.utils.random_utils import RandomStreams

TEST_METRIC_KEYS = ("R@5", "R@20", "N@5", "N@20")


def target_index(c: float) -> int:
    """Stable integer key of a target sparsity for seeding"""
    return int(round(c * 10_000))


@dataclass
class RetrainResult:
    """A converged recommender for one assignment"""
    dims: np.ndarray
    sparsity: float
    val_q_mean: float
    test_metrics: Dict[str, float]
    best_epoch: int
    recommender: Optional[BaseRecommender] = field(default=None, repr=False)

    def summary(self) -> Dict[str, object]:
        return {
            "sparsity": self.sparsity,
            "val_q_mean": self.val_q_mean,
            "best_epoch": self.best_epoch,
            "num_parameters": int(self.dims.sum()),
            **self.test_metrics,
        }


def retrain_assignment(dims: np.ndarray, config: RecommenderConfig, dataset: InteractionDataset,
                       baseline: FullEvalBaseline, init_seed: int,
                       rng: np.random.Generator) -> RetrainResult:
    """Train a fresh recommender with fixed dims to convergence and score it"""
    table = MaskedEmbeddingTable(dataset.num_users, dataset.num_items, config.d_max, dims)
    recommender = create_recommender(config, table, dataset)
    recommender.reinit(init_seed)
    fit = fit_to_convergence(recommender, dataset, config.max_epochs, config.patience, rng)
    quality = compute_quality(recommender, dataset, baseline)
    test = evaluate_users(recommender, dataset, Split.TEST, K_VALUES).summary()
    return RetrainResult(
        dims=table.dims.copy(),
        sparsity=table.sparsity(),
        val_q_mean=quality.mean_q,
        test_metrics={key: test[key] for key in TEST_METRIC_KEYS},
        best_epoch=fit.best_epoch,
        recommender=recommender,
    )


class BaseStrategy(ABC):
    """
    Base strategy class for all size strategies.

    Args:
        dataset: prepared interactions
        config: recommender used for retraining
        baseline: full-size evaluation cache, for validation q̄
        streams: seed source
        threads: concurrent retraining jobs
    """

    name: str = ""

    def __init__(self, dataset: InteractionDataset, config: RecommenderConfig,
                 baseline: FullEvalBaseline, streams: RandomStreams,
                 threads: Optional[int] = None):
        self.dataset = dataset
        self.config = config
        self.baseline = baseline
        self.streams = streams
        self.threads = threads
        self.logger = get_logger(self.__class__.__name__)

    @property
    def num_entities(self) -> int:
        return self.dataset.num_entities

    @abstractmethod
    def propose(self, c: float) -> List[np.ndarray]:
        """Assignments to retrain for target sparsity c"""

    def select(self, results: List[RetrainResult]) -> RetrainResult:
        """Pick the result to report; highest validation q̄, earliest on ties"""
        return max(enumerate(results), key=lambda pair: (pair[1].val_q_mean, -pair[0]))[1]

    def run(self, c: float) -> RetrainResult:
        """Propose, retrain every proposal to convergence and select one"""
        proposals = self.propose(c)
        # warm the lazily built sparse views before threads share the dataset
        for which in Split:
            self.dataset.matrix(which)
        self.dataset.users_of(0)
        self.dataset.train_keys
        self.dataset.popularity

        key = target_index(c)
        jobs = [
            (lambda dims=dims, rank=rank: retrain_assignment(
                dims, self.config, self.dataset, self.baseline,
                self.streams.seed(f"{self.name}.init", key, rank),
                self.streams.generator(f"{self.name}.train", key, rank),
            ))
            for rank, dims in enumerate(proposals)
        ]
        results = run_bounded(jobs, self.threads)
        best = self.select(results)
        self.logger.info(
            "strategy finished",
            strategy=self.name,
            c=c,
            proposals=len(results),
            sparsity=round(best.sparsity, 6),
            val_q_mean=round(best.val_q_mean, 6),
        )
        return best
