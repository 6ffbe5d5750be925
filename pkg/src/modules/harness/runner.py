"""
Bounded worker pool for grid sweeps.

Results always come back in grid order, so reports do not depend on the
number of workers.
"""

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Optional, TypeVar

from src.config import settings
from src.core.logging import get_logger

logger = get_logger("harness.runner")

T = TypeVar("T")
R = TypeVar("R")


def run_grid(fn: Callable[[T], R], items: Iterable[T], max_workers: Optional[int] = None) -> list[R]:
    """
    Map fn over items, in process when max_workers == 1.

    Args:
        fn: Picklable module-level function
        items: Grid points
        max_workers: Pool size, defaults to settings.workers.max_workers

    Returns:
        Results in the order of items
    """
    items = list(items)
    workers = max_workers or settings.workers.max_workers
    workers = max(1, min(workers, len(items) or 1))

    logger.debug(
        "Running grid",
        event="grid_start",
        function=getattr(fn, "__name__", repr(fn)),
        points=len(items),
        workers=workers,
    )
    if workers == 1:
        return [fn(item) for item in items]

    chunksize = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, items, chunksize=chunksize))
