"""
Block partitioning and a thread-pool block map.

Kernels are numpy-bound and release the GIL, so threads share the
read-only tables without copying. Results always come back in block order.
"""

import logging
from multiprocessing.pool import ThreadPool
from typing import Callable, TypeVar

from .config import DEFAULT_BLOCK_SIZE

logger = logging.getLogger(__name__)

T = TypeVar("T")


def partition(lo: int, hi: int, block_size: int = DEFAULT_BLOCK_SIZE) -> list[tuple[int, int]]:
    """Split the half-open range [lo, hi) into contiguous blocks."""
    if hi <= lo:
        return []
    return [(start, min(start + block_size, hi)) for start in range(lo, hi, block_size)]


def split_even(lo: int, hi: int, parts: int) -> list[tuple[int, int]]:
    """Split [lo, hi) into at most `parts` blocks of near-equal length."""
    n = hi - lo
    if n <= 0:
        return []
    parts = max(1, min(parts, n))
    size, extra = divmod(n, parts)
    blocks = []
    start = lo
    for i in range(parts):
        stop = start + size + (1 if i < extra else 0)
        blocks.append((start, stop))
        start = stop
    return blocks


def map_blocks(
    kernel: Callable[[int, int], T],
    blocks: list[tuple[int, int]],
    threads: int = 1,
) -> list[T]:
    """Apply kernel(lo, hi) to every block, returning results in block order."""
    if threads <= 1 or len(blocks) <= 1:
        return [kernel(lo, hi) for lo, hi in blocks]
    logger.debug("mapping %d blocks over %d threads", len(blocks), threads)
    with ThreadPool(processes=min(threads, len(blocks))) as pool:
        return pool.starmap(kernel, blocks)


def blocks_for(lo: int, hi: int, threads: int, block_size: int = DEFAULT_BLOCK_SIZE):
    """Blocks no larger than block_size and at least one per worker."""
    n = hi - lo
    if n <= 0:
        return []
    parts = max(threads, -(-n // block_size))
    return split_even(lo, hi, parts)
