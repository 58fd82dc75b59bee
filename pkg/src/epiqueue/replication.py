"""Deterministic fan-out of independent replications.

Replications are grouped into blocks of :data:`BLOCK_SIZE`. Block ``j`` of a
run with master seed ``seed`` draws from ``make_rng(seed, j)`` and simulates
its replications one after another on that stream. Workers receive whole
blocks, so the records never depend on the worker count.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .rng import make_rng

DEFAULT_MAX_EVENTS = 10**7
BLOCK_SIZE = 512


@dataclass(frozen=True)
class EventCaps:
    """Per-replication event budget; hitting it yields a censored outcome."""

    max_events: int = DEFAULT_MAX_EVENTS

    def __post_init__(self):
        if int(self.max_events) < 1:
            raise ValueError("max_events must be >= 1")


def block_sizes(replications):
    full, rest = divmod(int(replications), BLOCK_SIZE)
    return [BLOCK_SIZE] * full + ([rest] if rest else [])


def _run_blocks(block, args, seed, first, sizes, dtype):
    out = np.empty(sum(sizes), dtype=dtype)
    pos = 0
    for j, n in enumerate(sizes, start=first):
        cols = block(make_rng(seed, j), n, *args)
        for name, col in zip(dtype.names, cols):
            out[name][pos:pos + n] = col
        pos += n
    return out


def run_replications(block, args, replications, seed, dtype, workers=1):
    """Run ``replications`` outcomes through ``block(rng, n, *args)``.

    ``block`` must be a module-level function returning one array per field
    of ``dtype``, each of length ``n``. Records come back in replication
    order.
    """
    replications = int(replications)
    if replications < 1:
        raise ValueError("replications must be >= 1")
    sizes = block_sizes(replications)
    if workers is None or workers <= 1 or len(sizes) < 2:
        return _run_blocks(block, args, seed, 0, sizes, dtype)
    cuts = np.linspace(0, len(sizes), min(workers * 4, len(sizes)) + 1).astype(int)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_run_blocks, block, args, seed, int(lo), sizes[lo:hi], dtype)
                   for lo, hi in zip(cuts[:-1], cuts[1:]) if hi > lo]
        parts = [f.result() for f in futures]
    return np.concatenate(parts)
