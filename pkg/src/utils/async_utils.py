"""
Bounded concurrent execution of independent jobs.

Selective retraining and the baselines train several recommenders that share
nothing but read-only data, so they run through `asyncio.to_thread` under a
semaphore. Results always come back in submission order.
"""

import asyncio
import os
from typing import Callable, List, Optional, Sequence, TypeVar

from src.utils.logging_utils import get_logger

T = TypeVar("T")

logger = get_logger("async_utils")


def default_parallelism() -> int:
    """Machine parallelism, at least 1"""
    return max(1, os.cpu_count() or 1)


async def _run_all(jobs: Sequence[Callable[[], T]], limit: int) -> List[T]:
    semaphore = asyncio.Semaphore(limit)

    async def guarded(index: int, job: Callable[[], T]) -> T:
        async with semaphore:
            logger.debug("job started", index=index)
            result = await asyncio.to_thread(job)
            logger.debug("job finished", index=index)
            return result

    return await asyncio.gather(*(guarded(i, job) for i, job in enumerate(jobs)))


def run_bounded(jobs: Sequence[Callable[[], T]], limit: Optional[int] = None) -> List[T]:
    """
    Run zero-argument callables concurrently with at most `limit` in flight.

    The first exception raised by a job propagates to the caller.
    """
    if not jobs:
        return []
    limit = max(1, limit or default_parallelism())
    if limit == 1 or len(jobs) == 1:
        return [job() for job in jobs]
    return asyncio.run(_run_all(jobs, limit))
