"""Chunked, worker-count-independent execution of simulation kernels."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

CHUNK_SIZE = 1 << 18


def chunk_sizes(n_total: int, chunk_size: int = CHUNK_SIZE) -> list:
    """Sizes of the consecutive chunks covering ``n_total`` items."""
    if n_total < 0 or chunk_size < 1:
        raise ValueError("n_total must be >= 0 and chunk_size >= 1")
    full, rest = divmod(int(n_total), int(chunk_size))
    return [chunk_size] * full + ([rest] if rest else [])


def resolve_workers(workers) -> int:
    if workers is None or workers == 0:
        return os.cpu_count() or 1
    if workers < 0:
        raise ValueError("workers must be nonnegative")
    return int(workers)


def _call(payload):
    fn, index, size, args = payload
    return fn(index, size, *args)


def map_chunks(fn, n_total, *args, workers=1, chunk_size=CHUNK_SIZE) -> list:
    """Run ``fn(chunk_index, chunk_size, *args)`` over all chunks.

    Results come back in chunk order whatever the worker count, and chunk
    boundaries depend only on ``n_total`` and ``chunk_size``, so any
    order-dependent reduction over the returned list is reproducible.
    ``fn`` and ``args`` must be picklable when ``workers > 1``.
    """
    sizes = chunk_sizes(n_total, chunk_size)
    workers = resolve_workers(workers)
    payloads = [(fn, i, s, args) for i, s in enumerate(sizes)]
    if workers == 1 or len(payloads) <= 1:
        return [_call(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=min(workers, len(payloads))) as pool:
        return list(pool.map(_call, payloads))


def sum_counts(results) -> np.ndarray:
    """Exact integer reduction of per-chunk count arrays."""
    if not results:
        raise ValueError("no chunk results to reduce")
    total = np.zeros_like(np.asarray(results[0], dtype=np.int64))
    for r in results:
        total += np.asarray(r, dtype=np.int64)
    return total
