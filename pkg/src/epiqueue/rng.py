"""Seeded random sources.

Stream ``j`` under master seed ``seed`` is
``Generator(PCG64(SeedSequence(seed, spawn_key=(j,))))``, the same stream
``SeedSequence(seed).spawn(...)[j]`` would hand out. Batch runners key one
stream per block of replications, so results never depend on the order in
which blocks are executed.
"""
import numpy as np

RandomSource = np.random.Generator


def make_rng(seed, index=None):
    """Return a PCG64-backed generator for ``(seed, index)``.

    With ``index=None`` the stream is keyed on ``seed`` alone.
    """
    if index is None:
        ss = np.random.SeedSequence(int(seed))
    else:
        ss = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.PCG64(ss))
