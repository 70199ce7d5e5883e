"""
Interaction corpus: parsing, id remapping, per-user split and BPR sampling.
"""

import math
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from src.core.errors import DataParseError, SamplingError
from src.models.interactions import InteractionDataset
from src.utils.logging_utils import get_logger

logger = get_logger("corpus")

SEPARATORS: Dict[str, str] = {"csv": ",", "tsv": "\t", "dat": "::"}

HEADER_NAMES = {"user", "user_id", "userid", "item", "item_id", "itemid", "movie_id", "movieid"}

DEFAULT_MIN_INTERACTIONS = 4
MAX_SAMPLING_RETRIES = 100

RawPair = Tuple[str, str]


# ========== Parsing ==========

def _is_numeric(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


def _looks_like_header(first: List[str], second: List[str]) -> bool:
    names = {field.strip().lower() for field in first[:2]}
    if names & HEADER_NAMES:
        return True
    return not _is_numeric(first[0]) and bool(second) and _is_numeric(second[0])


def load_interactions(path: Union[str, Path], format: str = "csv") -> List[RawPair]:
    """
    Parse (user-token, item-token) pairs from a delimited file.

    Extra columns (ratings, timestamps) are ignored and duplicates are kept.
    A header row is skipped when detected.

    Args:
        path: interaction file
        format: one of csv, tsv, dat (MovieLens `::` layout)

    Returns:
        List of raw token pairs in file order
    """
    if format not in SEPARATORS:
        raise DataParseError(f"unsupported format {format!r}; expected one of {sorted(SEPARATORS)}")
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"interaction file not found: {path}")

    sep = SEPARATORS[format]
    rows: List[Tuple[int, List[str]]] = []
    with open(path, "rb") as f:
        for row_number, raw in enumerate(f, start=1):
            try:
                line = raw.decode("utf-8").rstrip("\r\n")
            except UnicodeDecodeError as e:
                raise DataParseError(f"invalid UTF-8 at byte {e.start}", row=row_number) from e
            if not line.strip():
                continue
            rows.append((row_number, [field.strip() for field in line.split(sep)]))

    if not rows:
        raise DataParseError(f"{path} contains no interactions")

    start = 0
    if _looks_like_header(rows[0][1], rows[1][1] if len(rows) > 1 else []):
        logger.debug("header row detected", fields=rows[0][1])
        start = 1

    pairs: List[RawPair] = []
    for row_number, fields in rows[start:]:
        if len(fields) < 2 or not fields[0] or not fields[1]:
            raise DataParseError(f"expected at least 2 columns, got {len(fields)}", row=row_number)
        pairs.append((fields[0], fields[1]))

    if not pairs:
        raise DataParseError(f"{path} contains a header but no interactions")

    logger.info("interactions loaded", path=str(path), pairs=len(pairs))
    return pairs


# ========== Split ==========

def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _split_sizes(n: int, ratios: Tuple[float, float, float]) -> Tuple[int, int, int]:
    n_val = max(1, _round_half_up(n * ratios[1]))
    n_test = max(1, _round_half_up(n * ratios[2]))
    while n - n_val - n_test < 1:
        if n_val >= n_test and n_val > 1:
            n_val -= 1
        elif n_test > 1:
            n_test -= 1
        else:
            break
    return n - n_val - n_test, n_val, n_test


def _kcore(frame: pd.DataFrame, min_interactions: int) -> pd.DataFrame:
    while True:
        user_counts = frame["user"].map(frame["user"].value_counts())
        item_counts = frame["item"].map(frame["item"].value_counts())
        keep = (user_counts >= min_interactions) & (item_counts >= min_interactions)
        if keep.all():
            return frame
        frame = frame[keep]


def _validate_ratios(ratios: Sequence[float]) -> Tuple[float, float, float]:
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise ValueError(f"ratios must be three positive numbers, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {sum(ratios)}")
    return float(ratios[0]), float(ratios[1]), float(ratios[2])


def split(pairs: Sequence[RawPair], ratios: Sequence[float] = (0.5, 0.25, 0.25), seed: int = 0,
          min_interactions: int = DEFAULT_MIN_INTERACTIONS) -> InteractionDataset:
    """
    Build an InteractionDataset with a per-user stratified random split.

    Duplicate pairs collapse to one positive. Users and items with fewer than
    `min_interactions` interactions are removed iteratively. Every surviving
    user has at least one interaction in each split and every item appears in
    train and in val.
    """
    ratios = _validate_ratios(ratios)
    frame = pd.DataFrame(list(pairs), columns=["user", "item"], dtype=str)
    frame = frame.drop_duplicates().sort_values(["user", "item"], kind="mergesort")

    excluded_items: set = set()
    while True:
        current = frame[~frame["item"].isin(excluded_items)] if excluded_items else frame
        current = _kcore(current, min_interactions)
        if current.empty:
            raise DataParseError(
                f"no user/item survives the minimum-interaction filter ({min_interactions})"
            )

        user_codes, user_tokens = pd.factorize(current["user"], sort=True)
        item_codes, item_tokens = pd.factorize(current["item"], sort=True)
        num_users, num_items = len(user_tokens), len(item_tokens)

        assignment = _assign_splits(user_codes, item_codes, num_users, ratios, seed)
        unrepairable = set(_repair_items(assignment, user_codes, item_codes, num_items, target=0))
        unrepairable.update(_repair_items(assignment, user_codes, item_codes, num_items, target=1))
        if not unrepairable:
            break
        excluded_items.update(item_tokens[i] for i in unrepairable)
        logger.info("dropping items absent from train or val", count=len(unrepairable))

    pairs_arr = np.stack([user_codes, item_codes], axis=1).astype(np.int64)
    parts = [pairs_arr[assignment == k] for k in range(3)]
    parts = [p[np.lexsort((p[:, 1], p[:, 0]))] for p in parts]

    dataset = InteractionDataset(
        num_users=num_users,
        num_items=num_items,
        train=parts[0],
        val=parts[1],
        test=parts[2],
        user_tokens=[str(t) for t in user_tokens],
        item_tokens=[str(t) for t in item_tokens],
        seed=seed,
        ratios=ratios,
    )
    logger.info(
        "dataset built",
        users=num_users,
        items=num_items,
        train=len(parts[0]),
        val=len(parts[1]),
        test=len(parts[2]),
    )
    return dataset


def _assign_splits(user_codes: np.ndarray, item_codes: np.ndarray, num_users: int,
                   ratios: Tuple[float, float, float], seed: int) -> np.ndarray:
    """0/1/2 split label per interaction; rows must be grouped by user"""
    rng = np.random.default_rng(seed)
    assignment = np.empty(len(user_codes), dtype=np.int64)
    order = np.lexsort((item_codes, user_codes))
    bounds = np.searchsorted(user_codes[order], np.arange(num_users + 1))
    for u in range(num_users):
        rows = order[bounds[u]:bounds[u + 1]]
        n_train, n_val, _ = _split_sizes(len(rows), ratios)
        shuffled = rows[rng.permutation(len(rows))]
        assignment[shuffled[:n_train]] = 0
        assignment[shuffled[n_train:n_train + n_val]] = 1
        assignment[shuffled[n_train + n_val:]] = 2
    return assignment


def _repair_items(assignment: np.ndarray, user_codes: np.ndarray, item_codes: np.ndarray,
                  num_items: int, target: int = 0) -> List[int]:
    """
    Move one interaction into split `target` for items with no pair there.

    The donor interaction must leave its user with at least one interaction in
    the split it came from, and a train donor must leave its item in train.
    Held-out splits donate before train. Returns items that could not be repaired.
    """
    covered = np.bincount(item_codes[assignment == target], minlength=num_items) > 0
    if covered.all():
        return []

    num_users = int(user_codes.max()) + 1
    per_user_split = {k: np.bincount(user_codes[assignment == k], minlength=num_users) for k in range(3)}
    item_train = np.bincount(item_codes[assignment == 0], minlength=num_items)
    donors = [k for k in (2, 1, 0) if k != target]

    unrepairable = []
    for item in np.flatnonzero(~covered):
        moved = False
        for k in donors:
            if k == 0 and item_train[item] < 2:
                continue
            rows = np.flatnonzero((item_codes == item) & (assignment == k))
            for row in rows[np.argsort(user_codes[rows], kind="mergesort")]:
                u = user_codes[row]
                if per_user_split[k][u] >= 2:
                    assignment[row] = target
                    per_user_split[k][u] -= 1
                    per_user_split[target][u] += 1
                    if k == 0:
                        item_train[item] -= 1
                    moved = True
                    break
            if moved:
                break
        if not moved:
            unrepairable.append(int(item))
    return unrepairable


# ========== BPR sampling ==========

def _sample_negative(dataset: InteractionDataset, user: int, rng: np.random.Generator) -> int:
    for _ in range(MAX_SAMPLING_RETRIES):
        candidate = int(rng.integers(dataset.num_items))
        if not dataset.is_train_pair(np.array([user]), np.array([candidate]))[0]:
            return candidate
    complement = np.setdiff1d(np.arange(dataset.num_items), dataset.items_of(user))
    return int(complement[rng.integers(len(complement))])


def sample_bpr_triple(dataset: InteractionDataset, rng: np.random.Generator) -> Tuple[int, int, int]:
    """
    Draw (u, v_pos, v_neg): a uniform train pair and a uniform non-interacted item.

    Users who interacted with every item are skipped by resampling the pair.
    """
    if len(dataset.train) == 0:
        raise SamplingError("dataset has no train interactions")
    for _ in range(MAX_SAMPLING_RETRIES):
        u, v = dataset.train[rng.integers(len(dataset.train))]
        if dataset.user_popularity[u] < dataset.num_items:
            return int(u), int(v), _sample_negative(dataset, int(u), rng)
    raise SamplingError(
        f"no user with a non-interacted item found after {MAX_SAMPLING_RETRIES} draws"
    )


def sample_bpr_batch(dataset: InteractionDataset, size: int,
                     rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized form of `sample_bpr_triple` returning `size` triples"""
    if len(dataset.train) == 0:
        raise SamplingError("dataset has no train interactions")
    eligible = np.flatnonzero(dataset.user_popularity[dataset.train[:, 0]] < dataset.num_items)
    if len(eligible) == 0:
        raise SamplingError("every user interacted with every item")

    rows = eligible[rng.integers(len(eligible), size=size)]
    users = dataset.train[rows, 0].copy()
    positives = dataset.train[rows, 1].copy()
    negatives = rng.integers(dataset.num_items, size=size)

    bad = np.flatnonzero(dataset.is_train_pair(users, negatives))
    for _ in range(MAX_SAMPLING_RETRIES):
        if len(bad) == 0:
            break
        negatives[bad] = rng.integers(dataset.num_items, size=len(bad))
        bad = bad[dataset.is_train_pair(users[bad], negatives[bad])]
    for i in bad:
        negatives[i] = _sample_negative(dataset, int(users[i]), rng)
    return users, positives, negatives


# ========== Statistics ==========

def _power_of_two_histogram(counts: np.ndarray) -> Dict[str, int]:
    if len(counts) == 0:
        return {}
    top = int(np.ceil(np.log2(max(2, counts.max() + 1))))
    edges = [2 ** k for k in range(top + 1)]
    labels = [f"[{edges[i]},{edges[i + 1]})" for i in range(len(edges) - 1)]
    binned = pd.cut(pd.Series(counts), bins=edges, right=False, labels=labels)
    return {str(k): int(v) for k, v in binned.value_counts(sort=False).items()}


def dataset_stats(dataset: InteractionDataset) -> Dict[str, object]:
    """Counts, split sizes, density and popularity histograms"""
    total = len(dataset.train) + len(dataset.val) + len(dataset.test)
    return {
        "num_users": dataset.num_users,
        "num_items": dataset.num_items,
        "num_interactions": total,
        "split_sizes": {
            "train": len(dataset.train),
            "val": len(dataset.val),
            "test": len(dataset.test),
        },
        "density": total / float(dataset.num_users * dataset.num_items),
        "ratios": list(dataset.ratios),
        "seed": dataset.seed,
        "popularity_histogram": {
            "users": _power_of_two_histogram(dataset.user_popularity),
            "items": _power_of_two_histogram(dataset.item_popularity),
        },
    }
