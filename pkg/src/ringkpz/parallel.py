"""Worker-count resolution and an order-preserving thread map."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

ENV_THREADS = "RINGKPZ_THREADS"
_override: int | None = None


def set_threads(n: int | None) -> None:
    """Cap the worker count for the whole process (``None`` restores the default)."""
    global _override
    if n is not None and n < 1:
        raise ValueError("thread count must be positive")
    _override = n


def threads() -> int:
    if _override is not None:
        return _override
    env = os.environ.get(ENV_THREADS)
    if env:
        return max(1, int(env))
    return 1


def ordered_map(fn, items, workers: int | None = None):
    """``list(map(fn, items))`` on a thread pool; results keep input order."""
    items = list(items)
    workers = threads() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
