"""
Shared fixtures: small planted-preference corpora and fast configurations.
"""

from pathlib import Path
from typing import List, Tuple

import numpy as np
import pytest

from src.config.settings import RunConfig, parse_config
from src.data.corpus import split
from src.evaluation.quality import FullEvalBaseline
from src.models.interactions import InteractionDataset
from src.utils.logging_utils import configure_logging
from src.utils.random_utils import RandomStreams


def planted_pairs(num_users: int = 24, num_items: int = 16, groups: int = 2) -> List[Tuple[str, str]]:
    """Every user interacts with every item of its own group"""
    pairs = []
    for u in range(num_users):
        for v in range(num_items):
            if u % groups == v % groups:
                pairs.append((f"u{u:03d}", f"i{v:03d}"))
    return pairs


def write_interactions(path: Path, pairs: List[Tuple[str, str]], sep: str = ",",
                       header: bool = True) -> Path:
    lines = [f"user_id{sep}item_id{sep}rating"] if header else []
    lines += [f"{u}{sep}{v}{sep}5" for u, v in pairs]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def dataset() -> InteractionDataset:
    return split(planted_pairs(), (0.5, 0.25, 0.25), seed=7, min_interactions=4)


@pytest.fixture
def tiny_dataset() -> InteractionDataset:
    """3 users, 4 items with fixed splits"""
    return InteractionDataset(
        num_users=3,
        num_items=4,
        train=np.array([[0, 0], [0, 1], [1, 1], [1, 2], [2, 2], [2, 3], [2, 0]]),
        val=np.array([[0, 2], [1, 3], [2, 1]]),
        test=np.array([[0, 3], [1, 0]]),
    )


@pytest.fixture
def fast_config() -> RunConfig:
    return parse_config({
        "seed": 11,
        "recommender": {
            "d_max": 8,
            "batch_size": 64,
            "max_epochs": 3,
            "patience": 2,
        },
        "search": {
            "episodes": 1,
            "iterations_per_episode": 2,
            "epochs_per_iter": 1,
            "top_l": 2,
            "target_sparsities": [0.3, 0.5],
            "noise": {"sigma": 2.0},
            "walk": {"threshold": 2, "length": 3},
        },
        "td3": {
            "batch_size": 8,
            "hidden_width": 8,
            "max_updates_per_iteration": 3,
        },
        "runtime": {"threads": 1},
    })


@pytest.fixture
def flat_baseline(dataset) -> FullEvalBaseline:
    """Baseline that makes q equal to the current evaluation, capped at 1"""
    return FullEvalBaseline(
        np.ones(dataset.num_users), np.ones(dataset.num_items), {"backbone": "mf-dot"}
    )


@pytest.fixture
def streams() -> RandomStreams:
    return RandomStreams(5)


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch, tmp_path):
    monkeypatch.delenv("CIESS_THREADS", raising=False)
    monkeypatch.delenv("CIESS_LOG_LEVEL", raising=False)
    monkeypatch.chdir(tmp_path)
    # CLI tests point the log stream at a runner buffer that is closed afterwards
    configure_logging("WARNING")
