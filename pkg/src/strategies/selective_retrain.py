"""
Selective retraining: converge each stored candidate and keep the best.
"""

from typing import List, Optional

import numpy as np

from src.config.settings import RecommenderConfig
from src.core.errors import NoCandidatesError
from src.evaluation.quality import FullEvalBaseline
from src.models.candidates import CandidateMaskSet
from src.models.interactions import InteractionDataset
from src.utils.random_utils import RandomStreams

from .base_strategy import BaseStrategy, RetrainResult


class CandidateStrategy(BaseStrategy):
    """Proposes the top-l assignments collected during search"""

    name = "ciess"

    def __init__(self, *args, candidates: CandidateMaskSet, **kwargs):
        super().__init__(*args, **kwargs)
        self.candidates = candidates
        self.results: List[RetrainResult] = []

    def propose(self, c: float) -> List[np.ndarray]:
        if len(self.candidates) == 0:
            raise NoCandidatesError(
                f"no candidate assignments reach sparsity {c}; run a longer search "
                f"or raise lambda so the policy compresses further"
            )
        return [record.dims.copy() for record in self.candidates]

    def select(self, results: List[RetrainResult]) -> RetrainResult:
        self.results = list(results)
        return super().select(results)


def selective_retrain(dataset: InteractionDataset, config: RecommenderConfig,
                      candidates: CandidateMaskSet, c: float, baseline: FullEvalBaseline,
                      streams: RandomStreams, threads: Optional[int] = None) -> RetrainResult:
    """
    Retrain every candidate for c from scratch and return the one with the best
    validation q̄, together with its test metrics.
    """
    strategy = CandidateStrategy(dataset, config, baseline, streams, threads,
                                 candidates=candidates)
    return strategy.run(c)
