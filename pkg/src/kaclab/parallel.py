"""Chunked deterministic seeding.

Work of size n is cut into fixed chunks of ``chunk_size``.  Chunk i gets its
own PCG64 stream seeded by ``SeedSequence(seed, spawn_key=(*key, i))`` and
results are concatenated in chunk order, so the output depends on
(seed, chunk_size) only and never on the number of worker threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

DEFAULT_CHUNK = 65536


def chunk_generator(seed: int, index: int, key: Sequence[int] = ()) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key) + (int(index),))
    return np.random.Generator(np.random.PCG64(ss))


def chunk_sizes(n: int, chunk_size: int) -> list[int]:
    if chunk_size <= 0:
        raise ValueError("chunk_size must be positive")
    full, rest = divmod(int(n), int(chunk_size))
    return [chunk_size] * full + ([rest] if rest else [])


def run_chunks(fn: Callable[[np.random.Generator, int], object], n: int, seed: int,
               chunk_size: int = DEFAULT_CHUNK, threads: int = 1,
               key: Sequence[int] = ()) -> list:
    """Apply ``fn(gen, size)`` to every chunk; results come back in chunk order."""
    sizes = chunk_sizes(n, chunk_size)
    jobs = [(chunk_generator(seed, i, key), s) for i, s in enumerate(sizes)]
    if threads <= 1 or len(jobs) <= 1:
        return [fn(g, s) for g, s in jobs]
    with ThreadPoolExecutor(max_workers=int(threads)) as ex:
        return list(ex.map(lambda job: fn(*job), jobs))
