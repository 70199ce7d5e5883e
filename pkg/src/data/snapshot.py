"""
Dataset snapshots.

A snapshot is a JSON document with sorted keys and no timestamps, so the same
dataset always serializes to the same bytes.
"""

import hashlib
import json
from pathlib import Path
from typing import Union

import numpy as np

from src.core.errors import DataParseError
from src.models.interactions import InteractionDataset

SNAPSHOT_FORMAT = "ciess-dataset"
SNAPSHOT_VERSION = 1
SNAPSHOT_FILE = "dataset.snapshot"


def save_snapshot(dataset: InteractionDataset, path: Union[str, Path]) -> Path:
    """Write the dataset, its id maps and split parameters"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "format": SNAPSHOT_FORMAT,
        "version": SNAPSHOT_VERSION,
        "num_users": dataset.num_users,
        "num_items": dataset.num_items,
        "user_tokens": list(dataset.user_tokens),
        "item_tokens": list(dataset.item_tokens),
        "seed": dataset.seed,
        "ratios": list(dataset.ratios),
        "train": dataset.train.tolist(),
        "val": dataset.val.tolist(),
        "test": dataset.test.tolist(),
    }
    path.write_text(json.dumps(payload, sort_keys=True, separators=(",", ":")), encoding="utf-8")
    return path


def load_snapshot(path: Union[str, Path]) -> InteractionDataset:
    path = Path(path)
    if path.is_dir():
        path = path / SNAPSHOT_FILE
    if not path.is_file():
        raise FileNotFoundError(f"dataset snapshot not found: {path}")
    payload = json.loads(path.read_text(encoding="utf-8"))
    if payload.get("format") != SNAPSHOT_FORMAT:
        raise DataParseError(f"{path} is not a dataset snapshot")
    if payload.get("version") != SNAPSHOT_VERSION:
        raise DataParseError(f"unsupported snapshot version {payload.get('version')}")

    def pairs(key: str) -> np.ndarray:
        return np.asarray(payload[key], dtype=np.int64).reshape(-1, 2)

    return InteractionDataset(
        num_users=payload["num_users"],
        num_items=payload["num_items"],
        train=pairs("train"),
        val=pairs("val"),
        test=pairs("test"),
        user_tokens=payload["user_tokens"],
        item_tokens=payload["item_tokens"],
        seed=payload["seed"],
        ratios=tuple(payload["ratios"]),
    )


def snapshot_digest(path: Union[str, Path]) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
