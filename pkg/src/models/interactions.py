"""
Interaction data model.
"""

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Dict, List, Tuple

import numpy as np
import scipy.sparse as sp


class Split(Enum):
    """Interaction split enumeration"""
    TRAIN = "train"
    VAL = "val"
    TEST = "test"


class Side(Enum):
    """Entity side enumeration"""
    USER = "user"
    ITEM = "item"


@dataclass(frozen=True)
class Interaction:
    """One implicit-feedback (user, item) pair with contiguous 0-based ids"""
    user: int
    item: int


@dataclass(eq=False)
class InteractionDataset:
    """
    Users, items and their train/val/test interactions.

    Entity ids: users occupy [0, num_users), item v is entity num_users + v.
    Split arrays have shape (n, 2) with columns (user, item). The dataset is
    treated as immutable once built.
    """
    num_users: int
    num_items: int
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray
    user_tokens: List[str] = field(default_factory=list)
    item_tokens: List[str] = field(default_factory=list)
    seed: int = 0
    ratios: Tuple[float, float, float] = (0.5, 0.25, 0.25)

    def __post_init__(self):
        for name in ("train", "val", "test"):
            arr = np.asarray(getattr(self, name), dtype=np.int64).reshape(-1, 2)
            arr.setflags(write=False)
            setattr(self, name, arr)

    # ========== Sizes ==========

    @property
    def num_entities(self) -> int:
        return self.num_users + self.num_items

    def split(self, which: Split) -> np.ndarray:
        return {Split.TRAIN: self.train, Split.VAL: self.val, Split.TEST: self.test}[which]

    def item_entity(self, item: int) -> int:
        """Entity id of an item"""
        return self.num_users + int(item)

    def interactions(self, which: Split = Split.TRAIN) -> List[Interaction]:
        return [Interaction(int(u), int(v)) for u, v in self.split(which)]

    # ========== Popularity ==========

    @cached_property
    def user_popularity(self) -> np.ndarray:
        """Train interaction count per user"""
        return np.bincount(self.train[:, 0], minlength=self.num_users).astype(np.int64)

    @cached_property
    def item_popularity(self) -> np.ndarray:
        """Train interaction count per item"""
        return np.bincount(self.train[:, 1], minlength=self.num_items).astype(np.int64)

    @cached_property
    def popularity(self) -> np.ndarray:
        """Train interaction count f_n per entity (users first, then items)"""
        return np.concatenate([self.user_popularity, self.item_popularity])

    # ========== Sparse views ==========

    def matrix(self, which: Split = Split.TRAIN) -> sp.csr_matrix:
        """Binary user x item matrix of a split"""
        return self._matrices[which]

    @cached_property
    def _matrices(self) -> Dict[Split, sp.csr_matrix]:
        out = {}
        for which in Split:
            pairs = self.split(which)
            data = np.ones(len(pairs), dtype=np.float64)
            mat = sp.csr_matrix(
                (data, (pairs[:, 0], pairs[:, 1])), shape=(self.num_users, self.num_items)
            )
            mat.sum_duplicates()
            mat.data[:] = 1.0
            out[which] = mat
        return out

    @cached_property
    def train_keys(self) -> np.ndarray:
        """Sorted `user * num_items + item` keys of the train pairs"""
        return np.unique(self.train[:, 0] * self.num_items + self.train[:, 1])

    def items_of(self, user: int, which: Split = Split.TRAIN) -> np.ndarray:
        mat = self.matrix(which)
        return mat.indices[mat.indptr[user]:mat.indptr[user + 1]].copy()

    def users_of(self, item: int, which: Split = Split.TRAIN) -> np.ndarray:
        return self._item_major[which].indices[
            self._item_major[which].indptr[item]:self._item_major[which].indptr[item + 1]
        ].copy()

    @cached_property
    def _item_major(self) -> Dict[Split, sp.csr_matrix]:
        return {which: self.matrix(which).T.tocsr() for which in Split}

    def is_train_pair(self, users: np.ndarray, items: np.ndarray) -> np.ndarray:
        """Vectorized membership test of (user, item) pairs in the train split"""
        keys = np.asarray(users, dtype=np.int64) * self.num_items + np.asarray(items, dtype=np.int64)
        if len(self.train_keys) == 0:
            return np.zeros(keys.shape, dtype=bool)
        pos = np.searchsorted(self.train_keys, keys)
        pos = np.minimum(pos, len(self.train_keys) - 1)
        return self.train_keys[pos] == keys
