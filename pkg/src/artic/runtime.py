"""Parallelism and randomness plumbing.

``ARTIC_THREADS`` caps worker threads (default 1, ``0`` = all cores).
"""

import os
import zlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np


def thread_count():
    raw = os.environ.get("ARTIC_THREADS", "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        return 1
    if n <= 0:
        return os.cpu_count() or 1
    return n


def ordered_map(fn, items):
    """``list(map(fn, items))``, run on a thread pool when allowed.

    Results keep input order, so reductions over them stay deterministic.
    """
    items = list(items)
    n = thread_count()
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def substream(seed, name, *ids):
    """Independent generator for the named sub-stream of a master seed."""
    key = zlib.crc32(name.encode("utf-8"))
    return np.random.default_rng([int(seed) & 0xFFFFFFFF, key, *map(int, ids)])
