"""Deterministic stream derivation for reproducible Monte Carlo.

Every run owns a 64-bit master seed. Each subsystem derives its generator
from (master seed, namespace), and replicate-level work spawns one child
stream per replicate index. Replicate i's stream depends only on its own
derivation path, so adding replicates or reordering their execution (e.g.
across a thread pool) never perturbs earlier results.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

__all__ = ["substream", "run_replicates"]


def _key_part(part) -> int:
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError("seed path parts must be non-negative")
        return int(part)
    if isinstance(part, str):
        digest = hashlib.sha256(part.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "little")
    raise TypeError(f"unsupported seed path part: {part!r}")


def substream(master_seed: int, *path) -> np.random.Generator:
    """Generator for the stream at (master_seed, *path).

    Path parts are non-negative ints or strings (hashed to stable ints).
    """
    key = tuple(_key_part(p) for p in path)
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=key))


def run_replicates(fn: Callable, rngs: Sequence[np.random.Generator], threads: int = 1) -> list:
    """Run fn(index, rng) for each replicate stream, merging results by index.

    With threads > 1 the replicates run on a thread pool; the output order is
    by index either way, so results do not depend on the thread count.
    """
    if threads <= 1:
        return [fn(i, rng) for i, rng in enumerate(rngs)]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, range(len(rngs)), rngs))
