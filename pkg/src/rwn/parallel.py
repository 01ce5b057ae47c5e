"""Chunked thread execution with order-independent results.

Workers only ever write to disjoint row slots or return per-chunk values
that get merged in index order, so output is bit-identical for any worker
count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def effective_workers(workers: int | None) -> int:
    if workers is None or workers <= 0:
        return 1
    return workers


def default_workers() -> int:
    return os.cpu_count() or 1


def map_chunks(n_items: int, fn, workers: int | None, min_chunk: int = 64) -> list:
    """Run fn(start, stop) over contiguous chunks; results in chunk order."""
    w = effective_workers(workers)
    if n_items <= 0:
        return []
    if w == 1 or n_items <= min_chunk:
        return [fn(0, n_items)]
    chunk = max(min_chunk, -(-n_items // w))
    spans = [(s, min(s + chunk, n_items)) for s in range(0, n_items, chunk)]
    with ThreadPoolExecutor(max_workers=w) as pool:
        futures = [pool.submit(fn, s, e) for s, e in spans]
        return [f.result() for f in futures]
