"""
LightGCN-style backbone without feature transforms or nonlinearities.

Final representation = mean of layer outputs 0..L, where layer l+1 is the
symmetric-normalized neighbor aggregation Â @ layer l over the train graph.
"""

from typing import Optional

import numpy as np
import scipy.sparse as sp

from src.config.settings import RecommenderConfig
from src.models.embedding import MaskedEmbeddingTable
from src.models.interactions import InteractionDataset, Split

from .base_recommender import BaseRecommender


def normalized_adjacency(dataset: InteractionDataset) -> sp.csr_matrix:
    """Â = D^-1/2 A D^-1/2 of the bipartite user-item train graph (N x N)"""
    r = dataset.matrix(Split.TRAIN)
    adjacency = sp.bmat([[None, r], [r.T, None]], format="csr")
    degree = np.asarray(adjacency.sum(axis=1)).ravel()
    inv_sqrt = np.zeros_like(degree)
    nonzero = degree > 0
    inv_sqrt[nonzero] = 1.0 / np.sqrt(degree[nonzero])
    d = sp.diags(inv_sqrt)
    return (d @ adjacency @ d).tocsr()


class LightGCNRecommender(BaseRecommender):
    """
    Graph backbone.

    Args:
        num_layers: overrides config.num_layers; 0 reduces to the dot-product model
    """

    backbone = "lightgcn-lite"

    def __init__(self, table: MaskedEmbeddingTable, config: RecommenderConfig,
                 dataset: InteractionDataset, num_layers: Optional[int] = None):
        super().__init__(table, config, dataset)
        self.num_layers = config.num_layers if num_layers is None else int(num_layers)
        if self.num_layers < 0:
            raise ValueError(f"num_layers must be >= 0, got {self.num_layers}")
        self.adjacency = normalized_adjacency(dataset)

    def propagate(self, layer0: np.ndarray) -> np.ndarray:
        total = layer0.copy()
        current = layer0
        for _ in range(self.num_layers):
            current = self.adjacency @ current
            total += current
        return total / (self.num_layers + 1)

    def propagate_grad(self, grad_final: np.ndarray) -> np.ndarray:
        # Â is symmetric, so the backward pass is the same linear map
        return self.propagate(grad_final)
