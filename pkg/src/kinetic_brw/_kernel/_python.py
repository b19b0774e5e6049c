"""Vectorized numpy implementation of the population-expansion kernel.

This is the import-time fallback when the compiled extension is absent.
Both implementations perform the identical per-element IEEE operations on
identical caller-supplied arrays (all randomness is drawn by the caller),
so their outputs are bit-for-bit equal.
"""

import numpy as np


def expand_generation(parent_pos, parent_death, counts, neg_log_w, lifetimes, t):
    """Turn one generation of dying particles into its children.

    Parent j (dying at parent_death[j] <= t) produces counts[j] children with
    positions parent_pos[j] + neg_log_w[i] and death times
    parent_death[j] + lifetimes[i], where i runs over the flat child slots in
    parent order. Children alive at t (death > t) are split off from children
    that die at or before t and will be expanded next.

    Returns (alive_pos, next_pos, next_death).
    """
    n_children = neg_log_w.shape[0]
    if n_children == 0:
        empty = np.empty(0, dtype=np.float64)
        return empty, empty.copy(), empty.copy()
    parent_idx = np.repeat(np.arange(counts.shape[0]), counts)
    child_pos = parent_pos[parent_idx] + neg_log_w
    child_death = parent_death[parent_idx] + lifetimes
    alive = child_death > t
    dying = ~alive
    return child_pos[alive], child_pos[dying], child_death[dying]
