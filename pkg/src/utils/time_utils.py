"""
Time utilities for run manifests and wall-clock accounting.
"""

import time
from contextlib import contextmanager
from datetime import datetime, timezone
from typing import Iterator, List


def get_utc_timestamp() -> float:
    """Get current UTC timestamp"""
    return time.time()


def get_utc_datetime() -> datetime:
    """Get current UTC datetime"""
    return datetime.now(timezone.utc)


def utc_isoformat() -> str:
    """Current UTC time as an ISO-8601 string with seconds precision"""
    return get_utc_datetime().replace(microsecond=0).isoformat()


@contextmanager
def stopwatch() -> Iterator[List[float]]:
    """
    Measure elapsed wall seconds of a block.

    Yields a one-element list that holds the elapsed time once the block exits.
    """
    elapsed = [0.0]
    start = time.perf_counter()
    try:
        yield elapsed
    finally:
        elapsed[0] = time.perf_counter() - start
