"""
Base recommenders and the backbone registry.
"""

from typing import Dict, Optional, Type

from src.config.settings import RecommenderConfig
from src.models.embedding import MaskedEmbeddingTable
from src.models.interactions import InteractionDataset

from .base_recommender import BaseRecommender
from .lightgcn_recommender import LightGCNRecommender, normalized_adjacency
from .mf_recommender import MFRecommender
from .trainer import FitResult, build_full_baseline, fit_to_convergence

RECOMMENDER_CLASSES: Dict[str, Type[BaseRecommender]] = {
    MFRecommender.backbone: MFRecommender,
    LightGCNRecommender.backbone: LightGCNRecommender,
}


def create_recommender(config: RecommenderConfig, table: MaskedEmbeddingTable,
                       dataset: InteractionDataset,
                       num_layers: Optional[int] = None) -> BaseRecommender:
    """Instantiate the backbone named by `config.backbone`"""
    if config.backbone not in RECOMMENDER_CLASSES:
        raise ValueError(
            f"unsupported backbone {config.backbone!r}; supported: {sorted(RECOMMENDER_CLASSES)}"
        )
    cls = RECOMMENDER_CLASSES[config.backbone]
    if cls is LightGCNRecommender:
        return LightGCNRecommender(table, config, dataset, num_layers=num_layers)
    return cls(table, config, dataset)


__all__ = [
    "BaseRecommender", "MFRecommender", "LightGCNRecommender", "RECOMMENDER_CLASSES",
    "create_recommender", "normalized_adjacency",
    "FitResult", "build_full_baseline", "fit_to_convergence",
]
