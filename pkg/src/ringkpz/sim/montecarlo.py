"""Event-driven simulation of ring TASEP and Monte Carlo estimators.

Each replica draws from its own PCG64 stream spawned from
``SeedSequence(seed)``, so results depend only on ``(seed, replicas)`` and
not on how replicas are split across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binomtest

from ..errors import DomainError
from ..parallel import ordered_map, threads
from .kernel import BACKEND, get_advance
from .oracle import signed_profile

RNG_ALGORITHM = "PCG64"
CHUNK = 4096
CI_LEVEL = 0.99


@dataclass
class RingState:
    occupation: np.ndarray  # int8, length L
    counters: np.ndarray  # int64, jumps across bond i -> i+1
    time: float = 0.0

    def __post_init__(self):
        self.occupation = np.ascontiguousarray(self.occupation, dtype=np.int8)
        self.counters = np.ascontiguousarray(self.counters, dtype=np.int64)
        if self.occupation.shape != self.counters.shape:
            raise DomainError("occupation and counters must have the same length")

    @property
    def L(self) -> int:
        return len(self.occupation)

    @property
    def n_particles(self) -> int:
        return int(self.occupation.sum())

    def copy(self) -> "RingState":
        return RingState(self.occupation.copy(), self.counters.copy(), self.time)


def sample_uniform(L: int, N: int, rng: np.random.Generator) -> RingState:
    """Uniformly random configuration of ``N`` particles on ``L`` sites."""
    if not (1 <= N <= L):
        raise DomainError("need 1 <= N <= L")
    occ = np.zeros(L, dtype=np.int8)
    occ[rng.choice(L, size=N, replace=False)] = 1
    return RingState(occ, np.zeros(L, dtype=np.int64))


def sample_bernoulli(L: int, p: float, rng: np.random.Generator) -> RingState:
    """Independent occupation with probability ``p`` per site."""
    if not (0.0 <= p <= 1.0):
        raise DomainError("p must lie in [0, 1]")
    occ = (rng.random(L) < p).astype(np.int8)
    return RingState(occ, np.zeros(L, dtype=np.int64))


def evolve(state: RingState, t_end: float, rng: np.random.Generator,
           backend: str | None = None) -> RingState:
    """Advance a copy of ``state`` to time ``t_end`` (exact in law)."""
    if t_end < state.time:
        raise DomainError("t_end must not precede the current time")
    advance = get_advance(backend)
    out = state.copy()
    t = out.time
    done = False
    while not done:
        u = rng.random(CHUNK)
        t, _, done = advance(out.occupation, out.counters, t, float(t_end), u)
    out.time = float(t_end)
    return out


def parse_ic(ic: str):
    """``"uniform"`` or ``"bernoulli:p"`` -> (kind, p)."""
    if ic == "uniform":
        return "uniform", None
    if ic.startswith("bernoulli:"):
        p = float(ic.split(":", 1)[1])
        if not (0.0 <= p <= 1.0):
            raise DomainError("Bernoulli parameter must lie in [0, 1]")
        return "bernoulli", p
    raise DomainError(f"unknown initial condition {ic!r}")


@dataclass(frozen=True)
class SimEnsemble:
    seed: int
    replicas: int
    ic: str = "uniform"

    def __post_init__(self):
        if self.replicas < 1:
            raise DomainError("need at least one replica")
        if not (0 <= self.seed < 2**64):
            raise DomainError("seed must be a 64-bit unsigned integer")
        parse_ic(self.ic)

    @property
    def stream_ids(self) -> range:
        return range(self.replicas)

    def generator(self, stream_id: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(stream_id,))
        return np.random.Generator(np.random.PCG64(ss))

    def config(self) -> dict:
        return {"seed": self.seed, "replicas": self.replicas, "ic": self.ic,
                "rng": RNG_ALGORITHM, "streams": "SeedSequence(seed, spawn_key=(replica,))"}


@dataclass
class EnsembleRun:
    L: int
    N: int
    t: float
    ensemble: SimEnsemble
    initial: np.ndarray  # (R, L) int8
    final: np.ndarray  # (R, L) int8
    counters: np.ndarray  # (R, L) int64
    backend: str = field(default=BACKEND)

    @property
    def particle_counts(self) -> np.ndarray:
        return self.initial.sum(axis=1)

    def heights(self, ell: int) -> np.ndarray:
        """``h_t(ell) = h_0(ell) + 2 J_ell(t)`` per replica."""
        return signed_profile(self.initial, ell) + 2 * self.counters[:, ell % self.L]

    def heights_all_origins(self, ell: int) -> np.ndarray:
        """Heights measured from every origin ``x`` (shape ``(R, L)``); by
        translation invariance each column has the law of ``h_t(ell)``."""
        L = self.L
        steps = 1 - 2 * self.initial.astype(np.int64)
        out = np.empty(self.counters.shape, dtype=np.int64)
        for x in range(L):
            shifted = np.roll(steps, -x, axis=1)
            if ell >= 1:
                prof = shifted[:, np.arange(1, ell + 1) % L].sum(axis=1)
            elif ell == 0:
                prof = 0
            else:
                prof = -shifted[:, np.arange(ell + 1, 1) % L].sum(axis=1)
            out[:, x] = prof + 2 * self.counters[:, (x + ell) % L]
        return out


def _run_block(args):
    L, N, t, ens, ids, backend = args
    kind, p = parse_ic(ens.ic)
    R = len(ids)
    init = np.empty((R, L), dtype=np.int8)
    fin = np.empty((R, L), dtype=np.int8)
    cnt = np.empty((R, L), dtype=np.int64)
    for r, sid in enumerate(ids):
        rng = ens.generator(sid)
        s0 = sample_uniform(L, N, rng) if kind == "uniform" else sample_bernoulli(L, p, rng)
        s1 = evolve(s0, t, rng, backend)
        init[r], fin[r], cnt[r] = s0.occupation, s1.occupation, s1.counters
    return init, fin, cnt


def run_ensemble(L: int, N: int, t: float, ensemble: SimEnsemble, backend: str | None = None,
                 workers: int | None = None) -> EnsembleRun:
    """Simulate all replicas of ``ensemble`` up to time ``t``."""
    if t < 0:
        raise DomainError("t must be nonnegative")
    if ensemble.ic == "uniform" and not (1 <= N <= L):
        raise DomainError("need 1 <= N <= L")
    workers = threads() if workers is None else workers
    nblk = max(1, min(ensemble.replicas, 4 * workers))
    bounds = np.linspace(0, ensemble.replicas, nblk + 1).astype(int)
    jobs = [(L, N, t, ensemble, range(bounds[i], bounds[i + 1]), backend) for i in range(nblk)]
    parts = ordered_map(_run_block, jobs, workers)
    init, fin, cnt = (np.concatenate([p[i] for p in parts]) for i in range(3))
    return EnsembleRun(L, N, float(t), ensemble, init, fin, cnt, backend or BACKEND)


# ---------------------------------------------------------------------------
# estimators


def wilson_interval(k: int, n: int, level: float = CI_LEVEL):
    ci = binomtest(int(k), int(n)).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass
class McCdf:
    b: np.ndarray
    p_hat: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    n: int

    def covers(self, b: int, p: float) -> bool:
        i = np.searchsorted(self.b, b)
        if i >= len(self.b) or self.b[i] != b:
            raise KeyError(b)
        return bool(self.ci_low[i] <= p <= self.ci_high[i])


def mc_height_cdf(L: int, N: int, t: float, ell: int, ensemble: SimEnsemble,
                  run: EnsembleRun | None = None, level: float = CI_LEVEL) -> McCdf:
    """Empirical ``P(h_t(ell) >= b)`` with Wilson intervals.

    Rows cover the parity lattice from the smallest to the largest observed
    height."""
    run = run or run_ensemble(L, N, t, ensemble)
    h = run.heights(ell)
    n = len(h)
    hmin, hmax = int(h.min()), int(h.max())
    b = np.arange(hmin, hmax + 1, 2)
    counts = np.bincount((h - hmin) // 2, minlength=len(b))
    ge = np.cumsum(counts[::-1])[::-1]
    lo, hi = zip(*(wilson_interval(k, n, level) for k in ge))
    return McCdf(b, ge / n, np.array(lo), np.array(hi), n)


@dataclass
class TwoPoint:
    ell: np.ndarray
    direct: np.ndarray
    direct_se: np.ndarray
    via_variance: np.ndarray
    via_variance_se: np.ndarray
    diff_se: np.ndarray  # jackknife error of (direct - via_variance)
    sum_direct: float
    sum_direct_se: float


def _jackknife(block_stats, fn):
    """Delete-one-block jackknife of ``fn`` applied to summed block statistics."""
    total = sum(block_stats)
    full = fn(total)
    reps = np.array([fn(total - s) for s in block_stats])
    B = len(block_stats)
    se = np.sqrt((B - 1) / B * ((reps - reps.mean(axis=0)) ** 2).sum(axis=0))
    return full, se


def mc_two_point(L: int, N: int, t: float, ensemble: SimEnsemble, run: EnsembleRun | None = None,
                 blocks: int = 50) -> TwoPoint:
    """``S(l; t) = E[eta_l(t) eta_0(0)] - rho^2`` two ways.

    The direct estimator averages ``eta_{x+l}(t) eta_x(0)`` over all origins
    ``x``; the second uses ``8 S(l) = Var h(l+1) - 2 Var h(l) + Var h(l-1)``
    with variances pooled over origins.  Errors come from a block jackknife
    over replicas.
    """
    if ensemble.ic != "uniform":
        raise DomainError("two-point estimators assume the uniform initial condition")
    run = run or run_ensemble(L, N, t, ensemble)
    rho = N / L
    R = run.initial.shape[0]
    ells = np.arange(L)
    eta0 = run.initial.astype(np.float64)
    eta_t = run.final.astype(np.float64)
    # prod[r, l] = (1/L) sum_x eta_{x+l}(t) eta_x(0)
    prod = np.stack([(np.roll(eta_t, -l, axis=1) * eta0).mean(axis=1) for l in ells], axis=1)
    hs = {l: run.heights_all_origins(l).astype(np.float64) for l in range(-1, L + 1)}
    m1 = np.stack([hs[l].mean(axis=1) for l in range(-1, L + 1)], axis=1)
    m2 = np.stack([(hs[l] ** 2).mean(axis=1) for l in range(-1, L + 1)], axis=1)

    edges = np.linspace(0, R, min(blocks, R) + 1).astype(int)
    stats = [np.concatenate([[edges[i + 1] - edges[i]],
                             prod[edges[i]:edges[i + 1]].sum(axis=0),
                             m1[edges[i]:edges[i + 1]].sum(axis=0),
                             m2[edges[i]:edges[i + 1]].sum(axis=0)]) for i in range(len(edges) - 1)]

    def unpack(s):
        n = s[0]
        pr = s[1:L + 1] / n
        a = s[L + 1:2 * L + 3] / n
        b = s[2 * L + 3:] / n
        var = b - a * a  # index j <-> ell = j - 1
        direct = pr - rho * rho
        via = (var[2:] - 2 * var[1:-1] + var[:-2]) / 8.0
        return direct, via

    d, d_se = _jackknife(stats, lambda s: unpack(s)[0])
    v, v_se = _jackknife(stats, lambda s: unpack(s)[1])
    _, diff_se = _jackknife(stats, lambda s: unpack(s)[0] - unpack(s)[1])
    tot, tot_se = _jackknife(stats, lambda s: np.array([unpack(s)[0].sum()]))
    return TwoPoint(ells, d, d_se, v, v_se, diff_se, float(tot[0]), float(tot_se[0]))


def mean_height(run: EnsembleRun, ell: int):
    """Sample mean of ``h_t(ell)`` and its standard error."""
    h = run.heights(ell).astype(np.float64)
    return float(h.mean()), float(h.std(ddof=1) / math.sqrt(len(h)))


def mean_height_identity(L: int, N: int, t: float, ell: int) -> float:
    """``E h_t(ell) = (1 - 2 rho) ell + 2 rho (1 - rho) t (1 + 1/(L - 1))``."""
    rho = N / L
    return (1 - 2 * rho) * ell + 2 * rho * (1 - rho) * t * (1 + 1 / (L - 1))
