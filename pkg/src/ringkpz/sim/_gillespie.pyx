# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Gillespie loop for ring TASEP.

Mirrors ``_gillespie_py.advance`` operation for operation so both backends
produce identical trajectories from the same uniform stream.
"""

from libc.math cimport log, floor

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline void _set(int site, bint on, int[::1] en, int[::1] pos, int* n) noexcept nogil:
    cdef int p, last
    if on and pos[site] < 0:
        en[n[0]] = site
        pos[site] = n[0]
        n[0] += 1
    elif not on and pos[site] >= 0:
        p = pos[site]
        last = en[n[0] - 1]
        en[p] = last
        pos[last] = p
        pos[site] = -1
        n[0] -= 1


def advance(cnp.int8_t[::1] occ, cnp.int64_t[::1] counters, double t, double t_end,
            const double[::1] u):
    """Run events until ``t_end`` or until fewer than two uniforms remain.

    Returns ``(t, used, done)``; ``occ`` and ``counters`` are updated in place.
    """
    cdef int L = occ.shape[0]
    cdef int n = 0, i, j, k, prev
    cdef Py_ssize_t used = 0, m = u.shape[0]
    cdef double dt
    cdef bint done = False
    en_arr = np.empty(L, dtype=np.int32)
    pos_arr = np.full(L, -1, dtype=np.int32)
    cdef int[::1] en = en_arr
    cdef int[::1] pos = pos_arr
    with nogil:
        for i in range(L):
            if occ[i] == 1 and occ[(i + 1) % L] == 0:
                en[n] = i
                pos[i] = n
                n += 1
        if n == 0:
            t = t_end
            done = True
        while not done:
            if used + 2 > m:
                break
            dt = -log(1.0 - u[used]) / n
            used += 1
            if t + dt > t_end:
                t = t_end
                done = True
                break
            t += dt
            k = <int>floor(u[used] * n)
            used += 1
            if k >= n:
                k = n - 1
            i = en[k]
            j = (i + 1) % L
            occ[i] = 0
            occ[j] = 1
            counters[i] += 1
            prev = (i + L - 1) % L
            _set(i, False, en, pos, &n)
            _set(prev, occ[prev] == 1, en, pos, &n)
            _set(j, occ[(j + 1) % L] == 0, en, pos, &n)
            if n == 0:
                t = t_end
                done = True
                break
    return t, used, done
