"""Deterministic worker decomposition for Monte Carlo loops.

Sample budgets are split into fixed per-worker quotas and each worker owns an
RNG derived from (seed, worker_index), so results depend only on the pair
(seed, workers) and never on scheduling.  Chunks may run on a thread pool;
partial results are always combined in worker order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np


def split_quota(total: int, workers: int) -> list[int]:
    base, rem = divmod(int(total), workers)
    return [base + (1 if i < rem else 0) for i in range(workers)]


def worker_rngs(seed: int, workers: int) -> list[np.random.Generator]:
    seqs = np.random.SeedSequence(int(seed)).spawn(workers)
    return [np.random.default_rng(s) for s in seqs]


def run_chunks(fn, seed: int, total: int, workers: int = 1):
    """Call ``fn(rng, quota)`` once per worker; return results in worker order."""
    workers = max(1, int(workers))
    quotas = split_quota(total, workers)
    rngs = worker_rngs(seed, workers)
    jobs = [(rng, q) for rng, q in zip(rngs, quotas) if q > 0]
    if workers == 1 or len(jobs) <= 1:
        return [fn(rng, q) for rng, q in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, rng, q) for rng, q in jobs]
        return [f.result() for f in futures]
