"""
Candidate mask bookkeeping for selective retraining.
"""

import hashlib
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional

import numpy as np

from src.core.errors import MaskValidationError


def assignment_digest(dims: np.ndarray) -> str:
    return hashlib.sha1(np.ascontiguousarray(dims, dtype=np.int64).tobytes()).hexdigest()


@dataclass
class CandidateRecord:
    """One dimension assignment seen during search"""
    dims: np.ndarray
    q_mean: float
    sparsity: float
    episode: int
    iteration: int

    @property
    def digest(self) -> str:
        return assignment_digest(self.dims)

    def summary(self) -> Dict[str, object]:
        return {
            "q_mean": self.q_mean,
            "sparsity": self.sparsity,
            "episode": self.episode,
            "iteration": self.iteration,
            "num_parameters": int(self.dims.sum()),
        }


class CandidateMaskSet:
    """
    Top-l assignments by mean quality among those meeting sparsity >= c.

    Records stay sorted by descending q_mean; on ties the earlier record ranks
    first. Offering an assignment already stored keeps the better score.
    """

    def __init__(self, c: float, top_l: int = 5):
        if not 0.0 < c < 1.0:
            raise ValueError(f"target sparsity must be in (0, 1), got {c}")
        if top_l < 1:
            raise ValueError(f"top_l must be >= 1, got {top_l}")
        self.c = c
        self.top_l = top_l
        self._records: List[CandidateRecord] = []

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self):
        return iter(self._records)

    @property
    def records(self) -> List[CandidateRecord]:
        return list(self._records)

    def offer(self, dims: np.ndarray, q_mean: float, sparsity: float,
              episode: int = 0, iteration: int = 0) -> bool:
        """
        Consider an assignment for admission.

        Returns:
            True when the assignment is now among the stored records
        """
        if sparsity < self.c:
            return False

        record = CandidateRecord(np.array(dims, dtype=np.int64), float(q_mean), float(sparsity),
                                 episode, iteration)
        digest = record.digest
        for i, existing in enumerate(self._records):
            if existing.digest == digest:
                if record.q_mean <= existing.q_mean:
                    return True
                del self._records[i]
                break

        if len(self._records) >= self.top_l and record.q_mean <= self._records[-1].q_mean:
            return False

        position = len(self._records)
        for i, existing in enumerate(self._records):
            if record.q_mean > existing.q_mean:
                position = i
                break
        self._records.insert(position, record)
        del self._records[self.top_l:]
        self._check()
        return True

    def _check(self) -> None:
        for record in self._records:
            if record.sparsity < self.c:
                raise MaskValidationError(
                    f"candidate with sparsity {record.sparsity} stored under c={self.c}"
                )

    def best(self) -> Optional[CandidateRecord]:
        return self._records[0] if self._records else None


class CandidateTracker:
    """CandidateMaskSets for every target sparsity, globally and per episode window"""

    def __init__(self, targets: Iterable[float], top_l: int = 5, window: int = 0):
        self.targets = sorted(set(float(c) for c in targets))
        self.top_l = top_l
        self.window = window
        self.global_sets: Dict[float, CandidateMaskSet] = {
            c: CandidateMaskSet(c, top_l) for c in self.targets
        }
        self.window_sets: Dict[int, Dict[float, CandidateMaskSet]] = {}

    def window_of(self, episode: int) -> int:
        return episode // self.window if self.window > 0 else 0

    def offer(self, dims: np.ndarray, q_mean: float, sparsity: float,
              episode: int, iteration: int) -> List[float]:
        """Offer to every target; returns the targets that admitted it"""
        admitted = []
        for c in self.targets:
            if self.global_sets[c].offer(dims, q_mean, sparsity, episode, iteration):
                admitted.append(c)
            if self.window > 0:
                sets = self.window_sets.setdefault(
                    self.window_of(episode),
                    {t: CandidateMaskSet(t, self.top_l) for t in self.targets},
                )
                sets[c].offer(dims, q_mean, sparsity, episode, iteration)
        return admitted

    def sets_for(self, window: Optional[int] = None) -> Dict[float, CandidateMaskSet]:
        if window is None:
            return self.global_sets
        return self.window_sets.get(window, {c: CandidateMaskSet(c, self.top_l) for c in self.targets})
