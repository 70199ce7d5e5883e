"""
Matrix factorization: ŷ_uv is the inner product of masked embeddings.
"""

import numpy as np

from .base_recommender import BaseRecommender


class MFRecommender(BaseRecommender):
    """Dot-product backbone; the final representation is the masked table itself"""

    backbone = "mf-dot"

    def propagate(self, layer0: np.ndarray) -> np.ndarray:
        return layer0

    def propagate_grad(self, grad_final: np.ndarray) -> np.ndarray:
        return grad_final.copy()
