"""
Worker pool for independent jobs: grid points, search restarts and bootstrap
resamples. Results come back in submission order whatever the completion order.
"""

import logging
import os
from concurrent.futures import ProcessPoolExecutor

logger = logging.getLogger(__name__)


def worker_count(threads=0):
    """0 means available parallelism"""
    if threads and threads > 0:
        return int(threads)
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def run_pool(fn, items, threads=0):
    """
    Map a picklable function over items.

    Runs serially for a single worker or a single item; otherwise on a process
    pool. The first exception raised by a job propagates to the caller.
    """
    items = list(items)
    workers = min(worker_count(threads), len(items))
    if workers <= 1:
        return [fn(item) for item in items]

    logger.debug("running %d jobs on %d workers", len(items), workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
