"""Exact transient law of the height function for tiny rings.

The chain lives on (configuration, J_0) where J_0 counts jumps across the
bond 0 -> 1.  The height at any site is then a function of the current
state, ``h_t(l) = 2 J_0(t) + sum_{j=1}^{l} (1 - 2 eta_j(t))`` (signed sum for
``l <= 0``), and the transient distribution is obtained by uniformization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np
import scipy.sparse as sp
from scipy.stats import poisson

from ..errors import DomainError, NonConvergenceError

MAX_STATES = 1000


@lru_cache(maxsize=32)
def configurations(L: int, N: int) -> np.ndarray:
    """All occupation vectors with ``N`` particles, shape ``(C(L,N), L)``."""
    out = np.zeros((math.comb(L, N), L), dtype=np.int8)
    for i, sites in enumerate(combinations(range(L), N)):
        out[i, list(sites)] = 1
    return out


def _index(configs):
    weights = 1 << np.arange(configs.shape[1], dtype=np.int64)
    return {int(k): i for i, k in enumerate(configs.astype(np.int64) @ weights)}, weights


@lru_cache(maxsize=32)
def _jumps(L: int, N: int):
    """Arrays ``(src, dst, site)``: one entry per enabled jump ``site -> site+1``."""
    configs = configurations(L, N)
    index, weights = _index(configs)
    src, dst, site = [], [], []
    for c, occ in enumerate(configs):
        for i in range(L):
            j = (i + 1) % L
            if occ[i] == 1 and occ[j] == 0:
                new = occ.copy()
                new[i], new[j] = 0, 1
                src.append(c)
                dst.append(index[int(new.astype(np.int64) @ weights)])
                site.append(i)
    return np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64), np.array(site, dtype=np.int64)


def ring_generator(L: int, N: int) -> sp.csr_matrix:
    """Generator of ring TASEP on configurations (rate 1 per enabled jump)."""
    n = math.comb(L, N)
    src, dst, _ = _jumps(L, N)
    q = sp.coo_matrix((np.ones(len(src)), (src, dst)), shape=(n, n)).tocsr()
    out = np.asarray(q.sum(axis=1)).ravel()
    return (q - sp.diags(out)).tocsr()


def signed_profile(occ: np.ndarray, ell: int) -> np.ndarray:
    """``sum_{j=1}^{ell} (1 - 2 eta_j)`` with the sign convention of the height
    function for ``ell <= 0``; ``occ`` may be a stack of configurations."""
    occ = np.asarray(occ)
    L = occ.shape[-1]
    steps = 1 - 2 * occ.astype(np.int64)
    if ell >= 1:
        idx = np.arange(1, ell + 1) % L
        return steps[..., idx].sum(axis=-1)
    if ell == 0:
        return np.zeros(occ.shape[:-1], dtype=np.int64)
    idx = np.arange(ell + 1, 1) % L
    return -steps[..., idx].sum(axis=-1)


@dataclass
class OracleResult:
    """``P(h_t(ell) >= b)`` on the parity lattice ``b = b_min, b_min+2, ...``."""

    b: np.ndarray
    p_ge: np.ndarray
    trunc_err: float
    pmf: np.ndarray  # P(h = b)

    def prob_ge(self, b: int) -> float:
        if b <= self.b[0]:
            return 1.0
        if b > self.b[-1]:
            return 0.0
        return float(self.p_ge[(b - self.b[0]) // 2])

    def mean(self) -> float:
        return float(np.dot(self.b, self.pmf))


def ctmc_oracle(L: int, N: int, t: float, ell: int, kmax: int | None = None,
                initial=None, tail_tol: float = 1e-12) -> OracleResult:
    """Exact distribution of ``h_t(ell)`` for the uniform (or a fixed) initial law.

    ``initial``, when given, is a single occupation vector of length ``L``.
    """
    n = math.comb(L, N)
    if n > MAX_STATES:
        raise DomainError(f"C({L},{N}) = {n} exceeds the oracle state limit {MAX_STATES}")
    if t < 0:
        raise DomainError("t must be nonnegative")
    need = int(math.ceil(t * L + 10.0 * math.sqrt(t * L) + 50))
    if kmax is None:
        kmax = need
    elif kmax < need:
        raise DomainError(f"kmax={kmax} below the required {need}")

    configs = configurations(L, N)
    p = np.zeros((n, kmax + 1))
    if initial is None:
        p[:, 0] = 1.0 / n
    else:
        occ = np.asarray(initial, dtype=np.int64)
        if occ.shape != (L,) or occ.sum() != N:
            raise DomainError("initial configuration must have length L and N particles")
        index, weights = _index(configs)
        p[index[int(occ @ weights)], 0] = 1.0

    src, dst, site = _jumps(L, N)
    rate = max(int(np.bincount(src, minlength=n).max()) if len(src) else 0, 1)
    out = np.bincount(src, minlength=n) / rate
    cross = site == 0
    # transposed transition blocks, so p_next = P0^T p + shift(P1^T p)
    p0t = (sp.coo_matrix((np.full((~cross).sum(), 1.0 / rate), (dst[~cross], src[~cross])), shape=(n, n))
           + sp.diags(1.0 - out)).tocsr()
    p1t = sp.coo_matrix((np.full(cross.sum(), 1.0 / rate), (dst[cross], src[cross])), shape=(n, n)).tocsr()

    lam = rate * t
    n_terms = int(poisson.isf(tail_tol, lam)) + 1 if lam > 0 else 0
    log_w = -lam
    acc = math.exp(log_w) * p
    lost = 0.0
    for m in range(1, n_terms + 1):
        moved = p1t @ p
        lost += float(moved[:, -1].sum())
        p = p0t @ p
        p[:, 1:] += moved[:, :-1]
        log_w += math.log(lam) - math.log(m)
        acc += math.exp(log_w) * p
    tail = float(poisson.sf(n_terms, lam)) if lam > 0 else 0.0
    if lost > tail_tol:
        raise NonConvergenceError(f"J_0 truncation at kmax={kmax} lost mass {lost:.2e}")

    base = signed_profile(configs, ell)
    h = base[:, None] + 2 * np.arange(kmax + 1)[None, :]
    hmin = int(h.min())
    pmf = np.zeros((int(h.max()) - hmin) // 2 + 1)
    np.add.at(pmf, (h - hmin) // 2, acc)
    nz = np.flatnonzero(pmf > 0)
    pmf = pmf[: nz[-1] + 1]
    start = nz[0]
    pmf = pmf[start:]
    b = hmin + 2 * (start + np.arange(len(pmf)))
    p_ge = np.cumsum(pmf[::-1])[::-1]
    return OracleResult(b=b, p_ge=p_ge, trunc_err=tail + lost, pmf=pmf)
