"""Thread pool and deterministic random streams.

numpy releases the GIL inside its array kernels and random fills, so a
thread pool is enough to keep all cores busy.
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

import numpy as np

from risnet.config import config

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def worker_count(threads: int | None = None) -> int:
    """Workers to use: explicit value, else RISNET_THREADS, else all cores"""
    n = threads or config.RISNET_THREADS or os.cpu_count() or 1
    return max(1, int(n))


def map_ordered(
    fn: Callable[[T], R], items: Iterable[T], threads: int | None = None
) -> list[R]:
    """Apply fn to every item concurrently; results keep the input order"""
    items = list(items)
    workers = min(worker_count(threads), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def spawn_generators(
    rng: np.random.Generator | int | None, n: int
) -> list[np.random.Generator]:
    """n independent child generators derived deterministically from rng.

    Stream i depends only on the parent state and i, never on scheduling.
    """
    if isinstance(rng, np.random.Generator):
        return rng.spawn(n)
    children = np.random.SeedSequence(rng).spawn(n)
    return [np.random.default_rng(child) for child in children]
