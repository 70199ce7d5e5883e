"""
Interaction data: parsing, splitting, sampling and snapshots.
"""

from .corpus import (
    dataset_stats,
    load_interactions,
    sample_bpr_batch,
    sample_bpr_triple,
    split,
)
from .snapshot import SNAPSHOT_FILE, load_snapshot, save_snapshot, snapshot_digest

__all__ = [
    "load_interactions", "split", "sample_bpr_triple", "sample_bpr_batch", "dataset_stats",
    "save_snapshot", "load_snapshot", "snapshot_digest", "SNAPSHOT_FILE",
]
