"""Sample-parallel execution with results independent of the worker count.

Work is cut into fixed chunks of sample indices; every chunk is computed by a
pure top-level function and the ordered list of chunk results is reduced by
the caller.  Per-sample RNG streams are keyed, not shared, so the only thing
the pool size can change is wall time.
"""

from __future__ import annotations

import multiprocessing
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable

WORKERS_ENV = "GINIBRE_FLOW_WORKERS"


def resolve_workers(explicit: int | None = None) -> int:
    if explicit is not None:
        return max(1, int(explicit))
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def chunk_ranges(n_items: int, chunk_size: int = 64) -> list[tuple[int, int]]:
    """Split ``range(n_items)`` into contiguous ranges of fixed size."""
    if n_items <= 0:
        return []
    size = max(1, int(chunk_size))
    return [(lo, min(lo + size, n_items)) for lo in range(0, n_items, size)]


def run_chunked(
    worker: Callable,
    common_args: tuple,
    n_items: int,
    workers: int | None = None,
    chunk_size: int = 64,
) -> list:
    """Map ``worker(common_args + (lo, hi))`` over index chunks, in order.

    The chunking depends only on ``n_items`` and ``chunk_size``, never on the
    worker count, and results come back in chunk order; combined with keyed
    per-sample RNG this makes any reduction over the results bit-reproducible.
    """
    workers = resolve_workers(workers)
    ranges = chunk_ranges(n_items, chunk_size)
    args = [common_args + r for r in ranges]
    if workers <= 1 or len(args) <= 1:
        return [worker(a) for a in args]
    ctx = multiprocessing.get_context("spawn")
    with ProcessPoolExecutor(max_workers=min(workers, len(args)), mp_context=ctx) as ex:
        return list(ex.map(worker, args))
