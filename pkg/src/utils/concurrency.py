import asyncio
import logging
from collections.abc import Callable, Sequence
from typing import Any

from config.settings import settings

logger = logging.getLogger(__name__)


async def _run_one(index: int, fn: Callable, item: Any, semaphore: asyncio.Semaphore):
    async with semaphore:
        return index, await asyncio.to_thread(fn, item)


async def gather_indexed(fn: Callable, items: Sequence, workers: int) -> list:
    semaphore = asyncio.Semaphore(max(1, workers))
    tasks = [_run_one(i, fn, item, semaphore) for i, item in enumerate(items)]
    results = await asyncio.gather(*tasks)
    return [value for _, value in sorted(results, key=lambda pair: pair[0])]


def map_ordered(fn: Callable, items: Sequence, workers: int | None = None) -> list:
    """fn over items on a bounded thread pool; results come back in item order."""
    workers = settings.default_workers if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    return asyncio.run(gather_indexed(fn, items, workers))
