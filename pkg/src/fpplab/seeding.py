"""Reproducible random streams and an order-preserving worker map.

A stream is identified by ``(master seed, purpose tag, *indices)``; nothing
else feeds the generator, so results do not depend on how replicates are
scheduled across workers.
"""

from __future__ import annotations

import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

DEFAULT_SEED = 20181127
SEED_ENV = "FPPLAB_SEED"

T = TypeVar("T")
R = TypeVar("R")


def tag_id(tag: str) -> int:
    return zlib.crc32(tag.encode("utf-8"))


def stream(seed: int, tag: str, *indices: int) -> np.random.Generator:
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF, tag_id(tag), *(int(i) for i in indices)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return int(seed)
    env = os.environ.get(SEED_ENV)
    return int(env) if env else DEFAULT_SEED


def default_workers() -> int:
    return int(os.environ.get("FPPLAB_WORKERS", "1"))


def worker_map(fn: Callable[[T], R], items: Sequence[T] | Iterable[T], workers: int | None = None) -> list[R]:
    """``[fn(x) for x in items]``, fanned over a thread pool when ``workers > 1``.

    Kernels release the GIL, so threads give real parallelism for the
    shortest-path work.  Output order always matches input order.
    """
    workers = default_workers() if workers is None else workers
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
