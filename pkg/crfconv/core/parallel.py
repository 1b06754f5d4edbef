"""Node-chunked thread fan-out for per-node kernels.

Chunks are contiguous node ranges and every chunk writes only its own output rows, so the result
does not depend on the number of workers.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List

logger = logging.getLogger(__name__)

_threads = 1

# below this many nodes the pool overhead dominates
MIN_NODES_PER_CHUNK = 256


def set_threads(threads: int) -> None:
    global _threads
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    _threads = threads
    logger.debug("internal parallelism capped at %d thread(s)", threads)


def get_threads() -> int:
    return _threads


def node_chunks(num_nodes: int, threads: int | None = None) -> List[tuple[int, int]]:
    threads = get_threads() if threads is None else threads
    count = max(1, min(threads, num_nodes // MIN_NODES_PER_CHUNK))
    bounds = [num_nodes * k // count for k in range(count + 1)]
    return [(bounds[k], bounds[k + 1]) for k in range(count) if bounds[k] < bounds[k + 1]]


def for_each_chunk(num_nodes: int, fn: Callable[[int, int], None], threads: int | None = None) -> None:
    """Call fn(start, stop) over contiguous node ranges, concurrently when more than one thread is allowed."""
    chunks = node_chunks(num_nodes, threads)
    if len(chunks) <= 1:
        for start, stop in chunks:
            fn(start, stop)
        return
    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        for future in [pool.submit(fn, start, stop) for start, stop in chunks]:
            future.result()
