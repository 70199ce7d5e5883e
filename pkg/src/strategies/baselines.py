"""
Uniform-size (ES) and random-size (MR) baselines.
"""

import math
from typing import Dict, List

import numpy as np

from src.config.settings import RecommenderConfig
from src.evaluation.quality import FullEvalBaseline
from src.models.embedding import sparsity_budget
from src.models.interactions import InteractionDataset
from src.utils.random_utils import RandomStreams

from .base_strategy import BaseStrategy, RetrainResult, target_index


def equal_size(d_max: int, c: float) -> int:
    """Largest uniform size ⌊(1 - c) d_max⌋ (at least 1) meeting sparsity c"""
    d = max(1, int(math.floor((1.0 - c) * d_max)))
    while d > 1 and 1.0 - d / d_max < c:
        d -= 1
    return d


def draw_mixed_random(num_entities: int, d_max: int, c: float,
                      rng: np.random.Generator) -> np.ndarray:
    """Sizes drawn uniformly from [1, 2⌊(1 - c) d_max⌋], before budget adjustment"""
    high = min(d_max, max(1, 2 * int(math.floor((1.0 - c) * d_max))))
    return rng.integers(1, high + 1, size=num_entities).astype(np.int64)


def fit_to_budget(dims: np.ndarray, budget: int, d_max: int) -> np.ndarray:
    """
    Rescale and clamp sizes so that sum(dims) <= budget.

    Proportional rescaling first, then the largest sizes are decremented one at
    a time until the budget holds. Every size stays in [1, d_max].
    """
    dims = np.clip(np.asarray(dims, dtype=np.int64), 1, d_max)
    if budget < len(dims):
        raise ValueError(f"budget {budget} cannot give {len(dims)} entities one dimension each")
    total = int(dims.sum())
    if total <= budget:
        return dims
    dims = np.maximum(1, np.floor(dims * (budget / total)).astype(np.int64))
    excess = int(dims.sum()) - budget
    while excess > 0:
        order = np.argsort(-dims, kind="stable")
        shrinkable = order[dims[order] > 1][:excess]
        dims[shrinkable] -= 1
        excess -= len(shrinkable)
    return dims


class EqualSizeStrategy(BaseStrategy):
    """Every user and item gets the same size"""

    name = "es"

    def propose(self, c: float) -> List[np.ndarray]:
        return [np.full(self.num_entities, equal_size(self.config.d_max, c), dtype=np.int64)]


class MixedRandomStrategy(BaseStrategy):
    """Sizes drawn at random, then fitted to the parameter budget"""

    name = "mr"

    def __init__(self, *args, seed: int = 0, **kwargs):
        super().__init__(*args, **kwargs)
        self.seed = seed

    def propose(self, c: float) -> List[np.ndarray]:
        rng = self.streams.generator("mr.sizes", self.seed, target_index(c))
        d_max = self.config.d_max
        drawn = draw_mixed_random(self.num_entities, d_max, c, rng)
        return [fit_to_budget(drawn, sparsity_budget(self.num_entities, d_max, c), d_max)]


def baseline_equal_sizes(dataset: InteractionDataset, config: RecommenderConfig, c: float,
                         baseline: FullEvalBaseline, streams: RandomStreams) -> RetrainResult:
    """ES: uniform sizes, retrained to convergence"""
    return EqualSizeStrategy(dataset, config, baseline, streams).run(c)


def baseline_mixed_random(dataset: InteractionDataset, config: RecommenderConfig, c: float,
                          seed: int, baseline: FullEvalBaseline,
                          streams: RandomStreams) -> RetrainResult:
    """MR: random sizes within the budget, retrained to convergence"""
    return MixedRandomStrategy(dataset, config, baseline, streams, seed=seed).run(c)


BASELINE_CLASSES: Dict[str, type] = {
    EqualSizeStrategy.name: EqualSizeStrategy,
    MixedRandomStrategy.name: MixedRandomStrategy,
}
