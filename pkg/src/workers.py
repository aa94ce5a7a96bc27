"""
Ordered worker pool for independent numerical blocks
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

try:
    from .config import Config
except ImportError:
    from config import Config

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(fn: Callable[[T], R], items: Iterable[T],
                 max_workers: Optional[int] = None) -> List[R]:
    """
    Apply fn to every item, possibly on several threads.

    Results come back in input order whatever the worker count, so any
    reduction done afterwards is deterministic.

    Args:
        fn: Function of one item
        items: Work items
        max_workers: Worker cap (defaults to CHARFLOW_THREADS)

    Returns:
        List of results aligned with items
    """
    work = list(items)
    workers = Config.worker_count() if max_workers is None else max(1, max_workers)
    workers = min(workers, len(work))

    if workers <= 1:
        return [fn(item) for item in work]

    logger.debug(f"Dispatching {len(work)} blocks to {workers} workers")
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, work))
