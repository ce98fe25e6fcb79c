"""Reproducible random streams and chunked parallel execution.

Every chunk of work owns a counter-based generator keyed by
``(seed, stream, chunk)``.  Chunk sizes are fixed and results are merged in
chunk order, so outputs never depend on how many workers ran them.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence

import numpy as np

CHUNK_SIZE = 2048
WORKERS_ENV = "JUMPBHP_WORKERS"


def chunk_generator(seed: int, stream: int, chunk: int) -> np.random.Generator:
    """Independent Philox generator for one chunk of one stream."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(chunk)))
    return np.random.Generator(np.random.Philox(ss))


def chunk_sizes(n: int, chunk_size: int = CHUNK_SIZE) -> List[int]:
    full, rest = divmod(int(n), chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def resolve_workers(workers: Optional[int] = None) -> int:
    """Explicit argument, else the environment override, else the CPU count."""
    if workers is None:
        env = os.environ.get(WORKERS_ENV)
        workers = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(workers))


def run_chunks(fn: Callable[[int, int], object], sizes: Sequence[int], workers: Optional[int] = None) -> list:
    """Evaluate ``fn(chunk_index, size)`` for every chunk; results in chunk order."""
    workers = resolve_workers(workers)
    jobs = list(enumerate(sizes))
    if workers == 1 or len(jobs) <= 1:
        return [fn(i, s) for i, s in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))
