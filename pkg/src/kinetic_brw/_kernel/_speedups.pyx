# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled population-expansion kernel: one fused pass over the children.

Mirrors _python.expand_generation element for element. All randomness is
drawn by the caller; this routine only performs IEEE additions, a compare
and a stable partition, so its output is bit-identical to the fallback.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def expand_generation(double[::1] parent_pos, double[::1] parent_death,
                      long long[::1] counts, double[::1] neg_log_w,
                      double[::1] lifetimes, double t):
    cdef Py_ssize_t n_parents = counts.shape[0]
    cdef Py_ssize_t n_children = neg_log_w.shape[0]
    if n_children == 0:
        empty = np.empty(0, dtype=np.float64)
        return empty, empty.copy(), empty.copy()

    alive_arr = np.empty(n_children, dtype=np.float64)
    next_pos_arr = np.empty(n_children, dtype=np.float64)
    next_death_arr = np.empty(n_children, dtype=np.float64)
    cdef double[::1] alive = alive_arr
    cdef double[::1] next_pos = next_pos_arr
    cdef double[::1] next_death = next_death_arr

    cdef Py_ssize_t j, k, i = 0, na = 0, nd = 0
    cdef double pos, death, p_pos, p_death
    for j in range(n_parents):
        p_pos = parent_pos[j]
        p_death = parent_death[j]
        for k in range(counts[j]):
            pos = p_pos + neg_log_w[i]
            death = p_death + lifetimes[i]
            i += 1
            if death > t:
                alive[na] = pos
                na += 1
            else:
                next_pos[nd] = pos
                next_death[nd] = death
                nd += 1

    return alive_arr[:na], next_pos_arr[:nd], next_death_arr[:nd]
