"""Order-preserving fan-out of independent work items over worker processes."""

import logging
from collections.abc import Callable, Iterable
from concurrent.futures import ProcessPoolExecutor

__all__ = ["map_tasks"]

logger = logging.getLogger(__name__)


def map_tasks[T, R](function: Callable[[T], R], tasks: Iterable[T], workers: int = 1) -> list[R]:
    """Apply a picklable function to every task and return results in task order.

    With one worker everything runs in the calling process, which is the
    reference behaviour; more workers only change wall time, never results.

    Args:
        function: Module-level function applied to each task.
        tasks: Work items; each must be picklable when ``workers > 1``.
        workers: Number of worker processes.

    Returns:
        One result per task, in the order the tasks were given.
    """
    if workers < 1:
        msg = f"Worker count must be positive, got {workers}"
        raise ValueError(msg)
    items = list(tasks)
    if workers == 1 or len(items) <= 1:
        return [function(item) for item in items]
    logger.debug("Distributing %d tasks over %d workers", len(items), workers)
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(function, items))
