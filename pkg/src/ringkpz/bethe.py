"""Roots of ``w^N (w+1)^(L-N) = zbold^L`` and their left/right partition.

Each root is computed on its own branch of a fixed-point equation, then
polished by Newton's method on that branch, so no degree-L companion
matrix is ever formed:

* right roots (around 0):  ``w = c_m (w+1)^(-(L-N)/N)``, ``c_m^N = zbold^L``
* left roots (around -1):  ``w + 1 = d_m (-w)^(-N/(L-N))``,
  ``d_m^(L-N) = (-1)^N zbold^L``

Principal powers are unambiguous because ``Re(w+1) > 0`` on the right set
and ``Re(-w) > 0`` on the left set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DomainError, NonConvergenceError, PartitionError

MAX_ITER = 200
RESIDUAL_TOL = 1e-10
PARTITION_GUARD = 1e-9


@dataclass(frozen=True)
class ModelParams:
    L: int
    N: int

    def __post_init__(self):
        if not (1 <= self.N < self.L):
            raise DomainError(f"need 1 <= N < L, got L={self.L}, N={self.N}")

    @property
    def rho(self) -> float:
        return self.N / self.L

    @property
    def log_r0(self) -> float:
        """``log(rho^rho (1-rho)^(1-rho))``."""
        rho = self.rho
        return rho * math.log(rho) + (1.0 - rho) * math.log1p(-rho)

    @property
    def r0(self) -> float:
        return math.exp(self.log_r0)


@dataclass(frozen=True)
class BetheRootSet:
    params: ModelParams
    zbold: complex
    log_zl: complex  # a logarithm of zbold^L
    left: np.ndarray
    right: np.ndarray

    @cached_property
    def all(self) -> np.ndarray:
        return np.concatenate([self.left, self.right])

    def residuals(self) -> np.ndarray:
        """Scaled residuals ``|q(w)| / max(|w^N (w+1)^(L-N)|, |zbold|^L)``."""
        return _scaled_residual(self.params, self.all, self.log_zl)


def substitute_z(params: ModelParams, z: complex, m: int = 0) -> complex:
    """Branch of ``zbold`` with ``zbold^L = (-1)^N r0^L z``."""
    z = complex(z)
    r = abs(z)
    if not (0.0 < r < 1.0):
        raise DomainError("substitute_z requires 0 < |z| < 1")
    L, N = params.L, params.N
    phase = (math.atan2(z.imag, z.real) + math.pi * N + 2.0 * math.pi * m) / L
    return complex(params.r0 * math.exp(math.log(r) / L) * complex(math.cos(phase), math.sin(phase)))


def _scaled_residual(params, w, log_zl):
    L, N = params.L, params.N
    lhs = N * np.log(w) + (L - N) * np.log(w + 1.0)
    # |R - 1| / max(|R|, 1) with R = w^N (w+1)^(L-N) / zbold^L
    d = lhs - log_zl
    diff = np.abs(np.expm1(d))
    return diff / np.maximum(np.exp(d.real), 1.0)


def _solve_branch(c, beta, sign):
    """Roots ``p`` of ``p = c * (1 + sign*p)^(-beta)``, one per entry of ``c``.

    A short fixed-point run gives the starting point and Newton on the same
    branch equation finishes.  ``Re(1 + sign*p) > 0`` holds on the solution
    branch, where the principal power is analytic; steps are halved to stay
    there.
    """
    p = c.copy()
    for _ in range(8):
        p = c * np.exp(-beta * np.log(1.0 + sign * p))
    for it in range(MAX_ITER - 8):
        base = 1.0 + sign * p
        powv = c * np.exp(-beta * np.log(base))
        step = (p - powv) / (1.0 + sign * beta * powv / base)
        trial = p - step
        bad = (1.0 + sign * trial).real <= 0.0
        while bad.any():
            step = np.where(bad, 0.5 * step, step)
            trial = p - step
            bad = (1.0 + sign * trial).real <= 0.0
        p = trial
        # quadratic convergence: a 1e-12 relative step leaves ~1e-24 error
        if np.all(np.abs(step) <= 1e-12 * np.abs(p)):
            return p
    raise NonConvergenceError(f"Bethe branch iteration exceeded {MAX_ITER} steps")


def solve_bethe_roots(params: ModelParams, zbold: complex) -> BetheRootSet:
    """All ``L`` roots of ``q_zbold``, split ``L-N`` left / ``N`` right."""
    L, N = params.L, params.N
    rho = params.rho
    zbold = complex(zbold)
    mod = abs(zbold)
    if not (0.0 < mod < params.r0):
        raise DomainError("solve_bethe_roots requires 0 < |zbold| < r0")
    log_zl = L * np.log(zbold)

    m = np.arange(N)
    c = np.exp((log_zl + 2j * math.pi * m) / N)
    right = _solve_branch(c, (L - N) / N, 1.0)
    # left roots in s = w + 1, where -w = 1 - s
    m = np.arange(L - N)
    d = np.exp((log_zl + 1j * math.pi * N + 2j * math.pi * m) / (L - N))
    left = _solve_branch(d, N / (L - N), -1.0) - 1.0

    if np.any(left.real >= -rho - PARTITION_GUARD) or np.any(right.real <= -rho + PARTITION_GUARD):
        raise PartitionError("a Bethe root lies within the guard band of Re w = -rho")
    roots = BetheRootSet(params, zbold, complex(log_zl), left, right)
    res = roots.residuals()
    if np.any(res > RESIDUAL_TOL):
        raise NonConvergenceError(f"Bethe root residual {res.max():.2e} above tolerance")
    allr = roots.all
    if L > 1:
        gaps = np.abs(allr[:, None] - allr[None, :]) + np.eye(L)
        if gaps.min() <= 1e-12:
            raise NonConvergenceError("two Bethe branches converged to the same root")
    return roots


def q_factor(roots: BetheRootSet, side: str, w, log: bool = False):
    """Monic factor ``prod (w - r)`` over the left or right root set.

    With ``log=True`` the sum of principal logarithms is returned instead,
    which stays finite when the product itself would overflow.
    """
    if side == "left":
        r = roots.left
    elif side == "right":
        r = roots.right
    else:
        raise ValueError("side must be 'left' or 'right'")
    w = np.asarray(w, dtype=complex)
    diff = w[..., None] - r
    if log:
        return np.log(diff).sum(axis=-1)
    return np.prod(diff, axis=-1)


def q_poly(params: ModelParams, zbold: complex, w):
    """``q_zbold(w) = w^N (w+1)^(L-N) - zbold^L``."""
    w = np.asarray(w, dtype=complex)
    return w**params.N * (w + 1.0) ** (params.L - params.N) - complex(zbold) ** params.L
