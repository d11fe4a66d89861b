import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Callable, Iterable, List, TypeVar

from django.conf import settings

logger = logging.getLogger(__name__)

T = TypeVar('T')
R = TypeVar('R')

MAX_THREADS = getattr(settings, 'CAUSAL_EMBED_THREADS', 1)


def map_in_order(func: Callable[[T], R], items: Iterable[T], max_workers: int = None) -> List[R]:
    """Run ``func`` over ``items`` on a thread pool and return results in input order.

    Args:
        func: pure function applied to each item
        items: work items; consumed eagerly
        max_workers: pool size, defaults to CAUSAL_EMBED_THREADS

    Returns:
        list of results aligned with ``items``
    """
    items = list(items)
    workers = max(1, min(max_workers or MAX_THREADS, len(items) or 1))
    if workers == 1 or len(items) < 2:
        return [func(item) for item in items]

    results = [None] * len(items)
    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = {executor.submit(func, item): index for index, item in enumerate(items)}
        for future in as_completed(futures):
            index = futures[future]
            try:
                results[index] = future.result()
            except Exception as e:
                logger.error(f"Worker failed on item {index}: {e}")
                raise
    return results
