"""
Numeric helpers shared by the recommenders, metrics and search.
"""

from typing import Union

import numpy as np
from scipy.special import expit, log_expit

ArrayLike = Union[float, np.ndarray]


def sigmoid(x: ArrayLike) -> ArrayLike:
    """Numerically stable logistic function"""
    return expit(x)


def log_sigmoid(x: ArrayLike) -> ArrayLike:
    """ln σ(x) without overflow for large |x|"""
    return log_expit(x)


def round_half_away(x: ArrayLike) -> ArrayLike:
    """Round to nearest integer, halves away from zero (numpy rounds halves to even)"""
    x = np.asarray(x, dtype=np.float64)
    out = np.sign(x) * np.floor(np.abs(x) + 0.5)
    return out if out.ndim else float(out)


def safe_normalize(values: np.ndarray, low: float, high: float, degenerate: float = 0.5) -> np.ndarray:
    """
    Min-max normalize into [0, 1].

    Args:
        values: values to normalize
        low: minimum of the reference range
        high: maximum of the reference range
        degenerate: value used for every entry when high == low

    Returns:
        Normalized array clipped to [0, 1]
    """
    values = np.asarray(values, dtype=np.float64)
    if high <= low:
        return np.full(values.shape, degenerate, dtype=np.float64)
    return np.clip((values - low) / (high - low), 0.0, 1.0)


def check_finite(*arrays: ArrayLike) -> bool:
    """True when every array is free of NaN/inf"""
    return all(np.all(np.isfinite(a)) for a in arrays)
