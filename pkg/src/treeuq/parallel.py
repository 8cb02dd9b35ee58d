"""Deterministic parallel map over independent work items.

Thread count comes from the TREEUQ_THREADS environment variable
(default 1). Results are collected in submission order, so output is
identical for any thread count.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

ENV_THREADS = "TREEUQ_THREADS"


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get(ENV_THREADS, "1")))
    except ValueError:
        return 1


def parallel_map(fn, items, threads: int | None = None) -> list:
    threads = thread_count() if threads is None else max(1, threads)
    items = list(items)
    if threads == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))
