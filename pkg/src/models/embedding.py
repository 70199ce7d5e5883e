"""
Masked embedding table.

The table stores the full-size value matrix E and one integer d_n per entity.
The binary mask M is implicit: entity n may use its first d_n dimensions and
every later position reads as zero. A dense M is never materialized.
"""

import math
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from src.core.errors import DataParseError, MaskValidationError

MASK_FORMAT_VERSION = 1


def sparsity_budget(num_entities: int, d_max: int, c: float) -> int:
    """
    Largest total number of usable parameters whose sparsity is still >= c.

    Computed against the same floating point expression `sparsity()` uses, so
    `sum(dims) <= budget` and `sparsity() >= c` always agree.
    """
    capacity = num_entities * d_max
    budget = min(capacity, int(math.floor((1.0 - c) * capacity)) + 1)
    while budget > 0 and 1.0 - budget / capacity < c:
        budget -= 1
    return budget


class MaskedEmbeddingTable:
    """
    Embedding table E with a per-entity prefix mask.

    Attributes:
        values: real matrix of shape (num_entities, d_max)
        dims: usable size d_n per entity, each in [1, d_max]
        d_max: full embedding size
    """

    def __init__(self, num_users: int, num_items: int, d_max: int,
                 dims: Optional[np.ndarray] = None):
        if d_max < 1:
            raise MaskValidationError(f"d_max must be >= 1, got {d_max}")
        self.num_users = int(num_users)
        self.num_items = int(num_items)
        self.d_max = int(d_max)
        self.values = np.zeros((self.num_entities, self.d_max), dtype=np.float64)
        self.dims = np.full(self.num_entities, self.d_max, dtype=np.int64)
        if dims is not None:
            self.set_dims(dims)

    @property
    def num_entities(self) -> int:
        return self.num_users + self.num_items

    # ========== Mask ==========

    def set_dims(self, assignment: np.ndarray) -> None:
        """Replace the per-entity sizes; values are left untouched"""
        assignment = np.asarray(assignment)
        if assignment.shape != (self.num_entities,):
            raise MaskValidationError(
                f"assignment has shape {assignment.shape}, expected ({self.num_entities},)"
            )
        if not np.all(np.equal(np.mod(assignment, 1), 0)):
            raise MaskValidationError("assignment must contain integers")
        assignment = assignment.astype(np.int64)
        bad = np.flatnonzero((assignment < 1) | (assignment > self.d_max))
        if len(bad):
            n = int(bad[0])
            raise MaskValidationError(
                f"entity {n} has size {int(assignment[n])}, outside [1, {self.d_max}] "
                f"({len(bad)} invalid entries)"
            )
        self.dims = assignment.copy()

    def prefix_mask(self, entities: Optional[np.ndarray] = None) -> np.ndarray:
        """Boolean mask rows for the given entities (all when None)"""
        dims = self.dims if entities is None else self.dims[entities]
        return np.arange(self.d_max)[None, :] < dims[:, None]

    def lookup(self, n: int) -> np.ndarray:
        """Masked embedding of entity n"""
        if not 0 <= n < self.num_entities:
            raise IndexError(f"entity {n} out of range [0, {self.num_entities})")
        out = np.zeros(self.d_max, dtype=np.float64)
        d = self.dims[n]
        out[:d] = self.values[n, :d]
        return out

    def masked_values(self, entities: Optional[np.ndarray] = None) -> np.ndarray:
        """Masked embeddings of many entities at once"""
        rows = self.values if entities is None else self.values[entities]
        return rows * self.prefix_mask(entities)

    def num_parameters(self) -> int:
        """Total usable parameters, the L1,1 norm of M"""
        return int(self.dims.sum())

    def sparsity(self) -> float:
        """Fraction of pruned parameters: 1 - sum(d_n) / (num_entities * d_max)"""
        return 1.0 - self.num_parameters() / (self.num_entities * self.d_max)

    def meets_sparsity(self, c: float) -> bool:
        return self.sparsity() >= c

    # ========== Values ==========

    def init_values(self, seed: int, scale: float = 0.1) -> None:
        """Draw every value i.i.d. from N(0, scale^2)"""
        rng = np.random.default_rng(seed)
        self.values = rng.normal(0.0, 1.0, size=(self.num_entities, self.d_max)) * scale

    def copy(self) -> "MaskedEmbeddingTable":
        other = MaskedEmbeddingTable(self.num_users, self.num_items, self.d_max)
        other.values = self.values.copy()
        other.dims = self.dims.copy()
        return other

    # ========== Mask artifact ==========

    def save_mask(self, path: Union[str, Path]) -> None:
        """Write `entity_id<TAB>d_n` lines under a header"""
        save_mask(path, self.dims, self.num_users, self.num_items, self.d_max)


def save_mask(path: Union[str, Path], dims: np.ndarray, num_users: int, num_items: int,
              d_max: int) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        f"# ciess-mask v{MASK_FORMAT_VERSION}",
        f"# d_max={d_max}\tnum_users={num_users}\tnum_items={num_items}",
    ]
    lines.extend(f"{n}\t{int(d)}" for n, d in enumerate(dims))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_mask(path: Union[str, Path]) -> Tuple[np.ndarray, int, int, int]:
    """
    Read a mask artifact.

    Returns:
        (dims, num_users, num_items, d_max)
    """
    header = {}
    entries = []
    with open(path, "r", encoding="utf-8") as f:
        for row, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for token in line[1:].split():
                    if "=" in token:
                        key, value = token.split("=", 1)
                        header[key] = int(value)
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataParseError(f"expected 'entity_id<TAB>d_n', got {line!r}", row=row)
            entries.append((int(parts[0]), int(parts[1])))

    missing = {"d_max", "num_users", "num_items"} - set(header)
    if missing:
        raise DataParseError(f"mask header lacks {sorted(missing)}")
    total = header["num_users"] + header["num_items"]
    dims = np.zeros(total, dtype=np.int64)
    seen = np.zeros(total, dtype=bool)
    for n, d in entries:
        if not 0 <= n < total:
            raise DataParseError(f"entity id {n} outside [0, {total})")
        dims[n] = d
        seen[n] = True
    if not seen.all():
        raise DataParseError(f"mask lists {int(seen.sum())} of {total} entities")
    return dims, header["num_users"], header["num_items"], header["d_max"]
