"""Pure-Python Gillespie loop; same contract and arithmetic as the compiled one."""

from __future__ import annotations

import math

import numpy as np


def _set(site, on, en, pos, n):
    if on and pos[site] < 0:
        en[n] = site
        pos[site] = n
        return n + 1
    if not on and pos[site] >= 0:
        p = pos[site]
        last = en[n - 1]
        en[p] = last
        pos[last] = p
        pos[site] = -1
        return n - 1
    return n


def advance(occ: np.ndarray, counters: np.ndarray, t: float, t_end: float, u: np.ndarray):
    """Run events until ``t_end`` or until fewer than two uniforms remain.

    Returns ``(t, used, done)``; ``occ`` and ``counters`` are updated in place.
    """
    L = len(occ)
    o = occ.tolist()
    uu = u.tolist()
    en = [0] * L
    pos = [-1] * L
    n = 0
    for i in range(L):
        if o[i] == 1 and o[(i + 1) % L] == 0:
            en[n] = i
            pos[i] = n
            n += 1
    if n == 0:
        return t_end, 0, True
    used, m = 0, len(uu)
    done = False
    moved = []
    while used + 2 <= m:
        dt = -math.log(1.0 - uu[used]) / n
        used += 1
        if t + dt > t_end:
            t, done = t_end, True
            break
        t += dt
        k = min(int(math.floor(uu[used] * n)), n - 1)
        used += 1
        i = en[k]
        j = (i + 1) % L
        o[i] = 0
        o[j] = 1
        moved.append(i)
        prev = (i + L - 1) % L
        n = _set(i, False, en, pos, n)
        n = _set(prev, o[prev] == 1, en, pos, n)
        n = _set(j, o[(j + 1) % L] == 0, en, pos, n)
        if n == 0:
            t, done = t_end, True
            break
    occ[:] = o
    if moved:
        np.add.at(counters, np.asarray(moved), 1)
    return t, used, done
