"""
Embedding size strategies: the RL search, selective retraining and baselines.
"""

from .base_strategy import BaseStrategy, RetrainResult, retrain_assignment
from .baselines import (
    EqualSizeStrategy,
    MixedRandomStrategy,
    baseline_equal_sizes,
    baseline_mixed_random,
    draw_mixed_random,
    equal_size,
    fit_to_budget,
)
from .search_driver import RunLog, SearchDriver, SearchResult, run_search
from .selective_retrain import CandidateStrategy, selective_retrain

__all__ = [
    "BaseStrategy", "RetrainResult", "retrain_assignment",
    "EqualSizeStrategy", "MixedRandomStrategy", "baseline_equal_sizes", "baseline_mixed_random",
    "draw_mixed_random", "equal_size", "fit_to_budget",
    "RunLog", "SearchDriver", "SearchResult", "run_search",
    "CandidateStrategy", "selective_retrain",
]
