"""Compare the compiled and pure-Python event loops.

Both backends consume the same uniform buffer, so the benchmark also checks
that they produce identical occupations and counters.

    python3 benchmarks/bench_gillespie.py --l 32 128 --events 200000
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from ringkpz.sim.kernel import get_advance
from ringkpz.sim.montecarlo import sample_uniform


def run(backend, occ, u, t_end, repeat):
    advance = get_advance(backend)
    best = np.inf
    for _ in range(repeat):
        o = occ.copy()
        c = np.zeros(len(o), dtype=np.int64)
        t0 = time.perf_counter()
        _, used, _ = advance(o, c, 0.0, t_end, u)
        best = min(best, time.perf_counter() - t0)
    return best, used // 2, o, c


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--l", type=int, nargs="+", default=[32, 128])
    ap.add_argument("--events", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=12345)
    args = ap.parse_args(argv)

    print(f"{'L':>5} {'events':>9} {'python [ev/s]':>14} {'cython [ev/s]':>14} {'speedup':>8} identical")
    for L in args.l:
        rng = np.random.default_rng(args.seed)
        occ = sample_uniform(L, L // 2, rng).occupation
        u = rng.random(2 * args.events)
        # t_end large enough that the buffer, not the clock, ends the run
        tp, ev, op, cp = run("python", occ, u, np.inf, args.repeat)
        tc, evc, oc, cc = run("cython", occ, u, np.inf, args.repeat)
        same = ev == evc and np.array_equal(op, oc) and np.array_equal(cp, cc)
        print(f"{L:>5} {ev:>9} {ev / tp:>14.3e} {ev / tc:>14.3e} {tp / tc:>8.1f} {same}")


if __name__ == "__main__":
    main()
