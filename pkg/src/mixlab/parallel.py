"""Deterministic work partitioning over a thread pool.

Work is always split into the same chunks (independent of the thread count)
and results are returned in submission order, so outputs never depend on
scheduling.  ``MIXLAB_THREADS`` sets the default pool size.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

_threads: int | None = None


def thread_count() -> int:
    if _threads is not None:
        return _threads
    raw = os.environ.get("MIXLAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"MIXLAB_THREADS must be an integer, got {raw!r}") from None
    return max(1, n)


def set_thread_count(n: int | None) -> None:
    global _threads
    _threads = None if n is None else max(1, int(n))


def pmap(fn, items, threads: int | None = None) -> list:
    items = list(items)
    n = threads or thread_count()
    if n <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def chunk_seeds(seed, n_total: int, chunk: int = 1 << 16):
    """Fixed ``(size, SeedSequence)`` chunks covering ``n_total`` draws."""
    sizes = [chunk] * (n_total // chunk)
    if n_total % chunk:
        sizes.append(n_total % chunk)
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    return list(zip(sizes, seqs))
