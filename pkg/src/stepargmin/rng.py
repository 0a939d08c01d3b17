"""Deterministic substream seeding and order-preserving parallel evaluation.

All randomness in the package flows from integer master seeds through
``substream``/``child_seed``; replication r always sees the same stream no
matter which worker runs it, so results are independent of worker count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

import numpy as np

_MASK64 = (1 << 64) - 1


def _entropy(master, path):
    return [int(master) & _MASK64] + [int(p) & _MASK64 for p in path]


def substream(master, *path):
    """Generator for the replication path (master, *path)."""
    return np.random.default_rng(np.random.SeedSequence(_entropy(master, path)))


def child_seed(master, *path):
    """64-bit integer seed derived from (master, *path)."""
    seq = np.random.SeedSequence(_entropy(master, path))
    return int(seq.generate_state(1, np.uint64)[0])


def _call_chunk(payload):
    worker, args, lo, hi = payload
    return worker(args, lo, hi)


def run_chunks(worker, args, n_items, workers=1):
    """Evaluate worker(args, lo, hi) over [0, n_items) and concatenate in order.

    ``worker`` must be a module-level function when workers > 1 (pickling).
    The chunk split depends on ``workers`` but per-item results do not.
    """
    workers = max(1, int(workers or 1))
    if workers == 1 or n_items <= 1:
        return worker(args, 0, n_items)
    n_chunks = min(n_items, workers * 4)
    edges = np.linspace(0, n_items, n_chunks + 1).astype(int)
    payloads = [
        (worker, args, int(lo), int(hi))
        for lo, hi in zip(edges[:-1], edges[1:])
        if hi > lo
    ]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_call_chunk, payloads))
    out = []
    for part in parts:
        out.extend(part)
    return out
