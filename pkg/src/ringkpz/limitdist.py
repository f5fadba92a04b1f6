"""Limiting crossover distributions on the relaxation time scale.

Everything is a contour average over ``|z| = r`` of a Fredholm determinant
on the discrete node set ``{xi : exp(-xi^2/2) = z, Re xi < 0}``.  The
kernel factors as ``K = diag(a) W diag(b) W`` with ``W = 1/(xi + eta)``, so
``det(I - K)`` is taken from the bordered matrix ``[[I, aW], [bW, I]]``.

Per-``z`` data (polylog constants, node set, the tail integrals) do not
depend on ``x`` or ``gamma`` and are cached per ``(z, tau)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg as sla
from scipy.special import ndtr, roots_hermite

from .errors import DomainError, NonConvergenceError, NumericalError
from .exactdist import KernelMatrix, QuadratureSpec
from .parallel import ordered_map
from .specfun import big_b, phi_tail_integral, polylog

SQRT_2PI = math.sqrt(2.0 * math.pi)
_TAIL_COEF = math.sqrt(2.0 / math.pi)
LOG_WEIGHT_CUT = 37.0
DEFAULT_LIMIT_QUAD = QuadratureSpec(radius=0.5, nodes=64)
MAX_Z_NODES = 512


@dataclass(frozen=True)
class ScalingParams:
    tau: float
    gamma: float = 0.0
    x: float = 0.0

    def __post_init__(self):
        if not self.tau > 0:
            raise DomainError("tau must be positive")


@dataclass(frozen=True)
class LimitNodeSet:
    z: complex
    left: np.ndarray
    index: np.ndarray  # the integer n of each node
    truncation: float  # largest |xi| kept

    @property
    def right(self) -> np.ndarray:
        return -self.left

    def __len__(self):
        return len(self.left)


def _node(logz, n):
    return -np.sqrt(-2.0 * logz - 4j * math.pi * n)


def s_nodes(z, tau: float | None = None, tol: float = 1e-16, M: float | None = None,
            x_lo: float = 0.0) -> LimitNodeSet:
    """Solutions of ``exp(-xi^2/2) = z`` with ``Re xi < 0``.

    With ``M`` given, every node with ``|xi| <= M`` is kept.  Otherwise nodes
    are kept while the estimated weight ``exp(Re(-tau xi^3/3 + x_lo xi))``
    is at least ``tol``; ``x_lo`` is the most negative ``x`` the set will be
    used for.
    """
    z = complex(z)
    if not (0.0 < abs(z) < 1.0):
        raise DomainError("node set requires 0 < |z| < 1")
    logz = complex(np.log(z))
    if M is None:
        if tau is None:
            raise DomainError("give either tau or a truncation radius M")
        cut = -math.log(tol)

        def keep(xi):
            return (-tau * xi**3 / 3.0 + min(x_lo, 0.0) * xi).real >= -cut
    else:
        def keep(xi):
            return abs(xi) <= M

    idx = [0] if keep(_node(logz, 0)) else []
    for sgn in (1, -1):
        n = sgn
        misses = 0
        # the weight is eventually monotone in |n|; allow a couple of misses
        while misses < 3:
            if keep(_node(logz, n)):
                idx.append(n)
                misses = 0
            else:
                misses += 1
            n += sgn
            if abs(n) > 100000:
                raise NumericalError("node enumeration did not terminate")
    idx = np.array(sorted(idx), dtype=np.int64)
    xi = _node(logz, idx)
    if np.any(np.abs(xi) < 1e-8):
        raise DomainError("degenerate node at xi = 0 (z too close to 1)")
    trunc = float(np.abs(xi).max()) if len(xi) else 0.0
    return LimitNodeSet(z, xi, idx, trunc if M is None else float(M))


def phi_z(xi, x: float, tau: float):
    """``-tau xi^3/3 + x xi - sqrt(2/pi) int_{-inf}^{xi} Li_{1/2}(e^{-w^2/2}) dw``."""
    xi = np.asarray(xi, dtype=complex)
    out = -tau * xi**3 / 3.0 + x * xi - _TAIL_COEF * phi_tail_integral(xi)
    return complex(out) if out.ndim == 0 else out


@dataclass
class _ZData:
    z: complex
    nodes: LimitNodeSet
    phi0: np.ndarray  # Phi at x = 0
    expo: complex  # tau A2 + 2B
    a1: complex


@dataclass
class LimitKernel:
    kernel: KernelMatrix
    dkernel: np.ndarray  # d/dx of the entries
    x_factor: np.ndarray  # aW
    y_factor: np.ndarray  # bW
    nodes: LimitNodeSet = field(repr=False)


def _factors(nodes: LimitNodeSet, phi: np.ndarray, gamma: float):
    xi = nodes.left
    n = nodes.index
    # gamma (xi^2 - eta^2)/2 = -2 pi i gamma (n_xi - n_eta): split as a phase per node
    ph = np.exp(-2j * math.pi * gamma * n)
    w = 1.0 / (xi[:, None] + xi[None, :])
    if np.any(np.abs(xi[:, None] + xi[None, :]) < 1e-12):
        raise NumericalError("coincident nodes in the limit kernel")
    a = np.exp(phi) * ph / xi
    b = np.exp(phi) / (ph * xi)
    return a[:, None] * w, b[:, None] * w


def limit_kernel(nodes: LimitNodeSet, sp: ScalingParams, phi: np.ndarray | None = None) -> LimitKernel:
    """Kernel matrix on the left nodes and its ``x``-derivative."""
    if len(nodes) == 0:
        raise DomainError("empty node set")
    if phi is None:
        phi = phi_z(nodes.left, sp.x, sp.tau)
    xf, yf = _factors(nodes, phi, sp.gamma)
    k = xf @ yf
    xi = nodes.left
    dk = xi[:, None] * k + xf @ (xi[:, None] * yf)
    return LimitKernel(KernelMatrix(k), dk, xf, yf, nodes)


def _bordered_minus(xf, yf):
    n = xf.shape[0]
    return np.block([[np.eye(n), xf], [yf, np.eye(n)]])


def det_i_minus_k(lk: LimitKernel, with_derivative: bool = False):
    """``det(I - K)`` and optionally its ``x``-derivative (Jacobi's formula)."""
    xf, yf = lk.x_factor, lk.y_factor
    mat = _bordered_minus(xf, yf)
    if not np.all(np.isfinite(mat)):
        raise NumericalError("limit kernel has non-finite entries")
    lu, piv = sla.lu_factor(mat, check_finite=False)
    d = np.diag(lu)
    swaps = int(np.count_nonzero(piv != np.arange(len(d))))
    det = np.prod(d) * (-1) ** swaps
    if not with_derivative:
        return complex(det)
    xi = lk.nodes.left
    n = len(xi)
    dmat = np.zeros(mat.shape, dtype=complex)
    dmat[:n, n:] = xi[:, None] * xf
    dmat[n:, :n] = xi[:, None] * yf
    # d det = det * tr(M^-1 dM); valid while M is nonsingular
    if np.min(np.abs(d)) < 1e-10 * np.max(np.abs(d)):
        sv = np.linalg.svd(np.eye(n) - lk.kernel.entries, compute_uv=False)
        if sv.min() < 1e-10:
            raise NumericalError("I - K is nearly singular")
    tr = np.trace(sla.lu_solve((lu, piv), dmat, check_finite=False))
    return complex(det), complex(det * tr)


def reach_estimate(tau: float, log_cap: float = 16.0) -> float:
    """Most negative ``x`` at which the contour integrand stays below
    ``exp(log_cap)``.  The kernel weight peaks at
    ``max_r (|x| r - tau r^3/3) sqrt 2 = (2/3) sqrt(2) |x|^1.5 / sqrt(tau)``."""
    return -(log_cap * math.sqrt(tau) * 3.0 / (2.0 * math.sqrt(2.0))) ** (2.0 / 3.0)


TAIL_BOUND = 1e-5
ESCALATED_QUAD = QuadratureSpec(radius=0.95, nodes=256)


class LimitEvaluator:
    """Evaluator of ``F_2`` and ``F_U`` for one ``tau`` with cached ``z`` data.

    Far in the left tail the contour integrand grows like
    ``exp(c |x|^1.5 / sqrt(tau))`` while the average is a small probability,
    so double precision runs out.  When the default contour does not
    converge a wider circle (``|z| = 0.95``) is tried; below that the tail is
    closed by monotonicity: ``0 <= F(x) <= F(x*)`` for the nearest reachable
    ``x* > x``, reported as the midpoint with half the bracket as error.
    """

    def __init__(self, tau: float, quad: QuadratureSpec | None = None, tol: float = 1e-16,
                 x_lo: float | None = None, zq_tol: float = 1e-9, truncation: float | None = None,
                 max_nodes: int = MAX_Z_NODES, escalate: bool = True, tail_bound: float = TAIL_BOUND):
        if not tau > 0:
            raise DomainError("tau must be positive")
        self.tau = float(tau)
        self.quad = quad or DEFAULT_LIMIT_QUAD
        self.tol = tol
        self.x_lo = reach_estimate(tau) if x_lo is None else float(x_lo)
        self.zq_tol = zq_tol
        self.truncation = truncation
        self.max_nodes = max_nodes
        self.tail_bound = tail_bound
        self._z: dict[tuple[int, int], _ZData] = {}
        self._memo: dict[tuple[str, float, float], tuple[float, float]] = {}
        self._reach: dict[tuple[str, float], tuple[float, float]] = {}
        self._wide = None
        if escalate and self.quad.radius < ESCALATED_QUAD.radius:
            self._wide = LimitEvaluator(tau, ESCALATED_QUAD, tol, self.x_lo, zq_tol, truncation,
                                        max_nodes=4 * max_nodes, escalate=False)

    def _zdata(self, j: int, m: int) -> _ZData:
        g = math.gcd(j, m)
        key = (j // g, m // g)
        hit = self._z.get(key)
        if hit is not None:
            return hit
        z = self.quad.radius * np.exp(2j * math.pi * j / m)
        nodes = s_nodes(z, self.tau, self.tol, M=self.truncation, x_lo=self.x_lo)
        phi0 = phi_z(nodes.left, 0.0, self.tau) if len(nodes) else np.zeros(0, complex)
        a1 = -polylog(1.5, z) / SQRT_2PI
        a2 = -polylog(2.5, z) / SQRT_2PI
        data = _ZData(z, nodes, phi0, self.tau * a2 + 2.0 * big_b(z), a1)
        self._z[key] = data
        return data

    def _integrand(self, data: _ZData, x: float, gamma: float, derivative: bool):
        e = np.exp(x * data.a1 + data.expo)
        if len(data.nodes) == 0:
            return e * (data.a1 if derivative else 1.0)
        lk = limit_kernel(data.nodes, ScalingParams(self.tau, gamma, x), data.phi0 + x * data.nodes.left)
        if derivative:
            det, ddet = det_i_minus_k(lk, True)
            return e * (data.a1 * det + ddet)
        return e * det_i_minus_k(lk)

    def integrand(self, z_index: int, m: int, x: float, gamma: float, derivative: bool) -> complex:
        return self._integrand(self._zdata(z_index, m), x, gamma, derivative)

    def _contour(self, x, gamma, kind):
        deriv = kind == "fu"
        m = self.quad.nodes
        prev = None
        cache: dict[tuple[int, int], complex] = {}
        while True:
            todo = []
            for j in range(m):
                g = math.gcd(j, m)
                key = (j // g, m // g)
                if key not in cache:
                    todo.append((j, key))

            def work(item):
                j, _ = item
                data = self._zdata(j, m)
                val = self._integrand(data, x, gamma, deriv)
                return val / data.z if deriv else val

            for (j, key), val in zip(todo, ordered_map(work, todo)):
                cache[key] = val
            vals = np.array([cache[(j // math.gcd(j, m), m // math.gcd(j, m))] for j in range(m)])
            val = vals.mean()
            if deriv:
                val = -SQRT_2PI * val
            if prev is not None and abs(val - prev) < self.zq_tol:
                return val, abs(val - prev), m
            if 2 * m > self.max_nodes:
                raise NonConvergenceError(
                    f"limit contour not converged at {m} nodes (change {abs(val - prev):.2e})")
            prev = val
            m *= 2

    def _finish(self, val, err):
        if abs(val.imag) > 1e-8:
            raise NumericalError(f"imaginary residue {abs(val.imag):.2e}")
        p = float(val.real)
        if p < -1e-6 or p > 1 + 1e-6:
            raise NumericalError(f"distribution value {p!r} outside [0, 1]")
        return min(max(p, 0.0), 1.0), max(err, abs(val.imag))

    def _direct(self, x, gamma, kind):
        """Contour value without tail closure; raises on non-convergence."""
        if x < self.x_lo:
            raise NonConvergenceError(f"x={x} below the reachable range (x >= {self.x_lo:.2f})")
        try:
            val, err, _ = self._contour(x, gamma, kind)
        except NonConvergenceError:
            if self._wide is None:
                raise
            val, err, _ = self._wide._contour(x, gamma, kind)
        return self._finish(val, err)

    def _value(self, x, gamma, kind):
        x, gamma = float(x), float(gamma)
        key = (kind, x, gamma)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        try:
            out = self._direct(x, gamma, kind)
        except (NonConvergenceError, NumericalError):
            out = self._closed_tail(x, gamma, kind)
        self._memo[key] = out
        return out

    def _closed_tail(self, x, gamma, kind, step=0.25):
        known = self._reach.get((kind, gamma))
        if known is not None and known[0] >= x:
            bound = known[1]
            return 0.5 * bound, 0.5 * bound
        xs = max(x, self.x_lo)
        xs = x + step * math.ceil((xs - x) / step)
        while xs < 0.0:
            try:
                bound = self._direct(xs, gamma, kind)[0]
            except (NonConvergenceError, NumericalError):
                xs += step
                continue
            if bound > self.tail_bound:
                break
            self._reach[(kind, gamma)] = (xs, bound)
            return 0.5 * bound, 0.5 * bound
        raise NonConvergenceError(
            f"contour not converged at x={x} and the monotone tail bound exceeds {self.tail_bound:g}")

    def f2(self, x: float, gamma: float = 0.0):
        """``(F_2(x), err)``."""
        return self._value(x, gamma, "f2")

    def fu(self, x: float, gamma: float = 0.0):
        """``(F_U(x), err)``."""
        return self._value(x, gamma, "fu")

    def fu_raw(self, x: float, gamma: float = 0.0) -> complex:
        """Unclamped contour value of ``F_U`` on the primary circle (diagnostics)."""
        return self._contour(float(x), float(gamma), "fu")[0]

    def fu_grid(self, xs, gamma: float = 0.0):
        vals = [self.fu(x, gamma) for x in xs]
        return np.array([v[0] for v in vals]), np.array([v[1] for v in vals])

    def finite_difference(self, z_index, m, x, gamma, h=1e-4) -> complex:
        """Central difference of the ``F_2`` integrand in ``x`` (cross-check)."""
        data = self._zdata(z_index, m)
        return (self._integrand(data, x + h, gamma, False) - self._integrand(data, x - h, gamma, False)) / (2 * h)


@lru_cache(maxsize=16)
def _evaluator(tau, radius, nodes, truncation):
    return LimitEvaluator(tau, QuadratureSpec(radius, nodes), truncation=truncation)


def _get(sp: ScalingParams, quad: QuadratureSpec | None, truncation=None) -> LimitEvaluator:
    quad = quad or DEFAULT_LIMIT_QUAD
    return _evaluator(float(sp.tau), quad.radius, quad.nodes, truncation)


def f2_limit(sp: ScalingParams, quad: QuadratureSpec | None = None) -> float:
    """``F_2(x; tau, gamma)``: the step-initial-condition crossover distribution."""
    return _get(sp, quad).f2(sp.x, sp.gamma)[0]


def fu_limit(sp: ScalingParams, quad: QuadratureSpec | None = None) -> float:
    """``F_U(x; tau, gamma)``: the stationary crossover distribution."""
    return _get(sp, quad).fu(sp.x, sp.gamma)[0]


def fb_bernoulli(sp: ScalingParams, quad: QuadratureSpec | None = None, ynodes: int = 80,
                 weight_cut: float = 1e-17) -> float:
    """``F_B`` as a Gaussian mixture of ``F_U`` over the position parameter.

    With ``y = gamma + 2 sqrt(2) tau s`` the mixing weight becomes
    ``exp(-s^2)/sqrt(pi)`` and Gauss-Hermite applies.  Nodes whose weight is
    below ``weight_cut`` are dropped: ``0 <= F_U <= 1`` bounds their
    contribution by the weight itself.  ``F_U`` is 1-periodic in ``y``, so
    the integrand oscillates with period ``1/(2 sqrt 2 tau)`` in ``s``; at
    ``tau = 1`` 40 nodes leave errors near 5e-5 and 80 nodes near 5e-7.
    """
    if ynodes < 20:
        raise DomainError("need at least 20 Gauss-Hermite nodes")
    ev = _get(sp, quad)
    s, w = roots_hermite(ynodes)
    w = w / math.sqrt(math.pi)
    tau, gamma = sp.tau, sp.gamma
    total = 0.0
    for si, wi in zip(s, w):
        if wi < weight_cut:
            continue
        y = gamma + 2.0 * math.sqrt(2.0) * tau * si
        arg = sp.x + (gamma**2 - y**2) / (4.0 * tau)
        total += wi * _fu_clipped(ev, arg, y)
    return min(max(total, 0.0), 1.0)


def _fu_clipped(ev: LimitEvaluator, x, gamma):
    # period reduction keeps the phases small; F_U is 1-periodic in gamma
    return ev.fu(x, gamma - math.floor(gamma + 0.5))[0]


# ---------------------------------------------------------------------------
# moments


X_GRID = (-15.0, 10.0, 0.05)


@dataclass
class CdfTable:
    x: np.ndarray
    value: np.ndarray
    err: np.ndarray


def tabulate_fu(tau: float, gamma: float = 0.0, grid=X_GRID, quad: QuadratureSpec | None = None) -> CdfTable:
    lo, hi, step = grid
    xs = np.linspace(lo, hi, int(round((hi - lo) / step)) + 1)
    ev = _get(ScalingParams(tau), quad)
    v, e = ev.fu_grid(xs, gamma)
    return CdfTable(xs, v, e)


def moments(tab: CdfTable, mass_tol: float = 1e-8):
    """First and second moments from a tabulated CDF, by parts:
    ``int x dF = [xF] - int F dx`` and ``int x^2 dF = [x^2 F] - int 2xF dx``
    with composite Simpson on the grid.

    The range check fails only when the mass outside the grid provably
    exceeds ``mass_tol``; a tail value known only as a bracket passes.
    """
    from scipy.integrate import simpson

    x, f, e = tab.x, tab.value, tab.err
    lo_mass = f[0] - e[0]
    hi_mass = 1.0 - f[-1] - e[-1]
    if lo_mass > mass_tol or hi_mass > mass_tol:
        raise NumericalError(
            f"mass outside [{x[0]}, {x[-1]}] exceeds {mass_tol:g} "
            f"(F(lo)={f[0]:.2e}, 1-F(hi)={1 - f[-1]:.2e})")
    m1 = x[-1] * f[-1] - x[0] * f[0] - simpson(f, x=x)
    m2 = x[-1] ** 2 * f[-1] - x[0] ** 2 * f[0] - simpson(2.0 * x * f, x=x)
    return float(m1), float(m2)


def g_u(gamma: float, tau: float, quad: QuadratureSpec | None = None) -> float:
    """``tau^(2/3) int x^2 dF_U(x; tau, gamma)``."""
    _, m2 = moments(tabulate_fu(tau, gamma, quad=quad))
    return tau ** (2.0 / 3.0) * m2


def g_u_second(gamma: float, tau: float, h: float = 0.05, quad: QuadratureSpec | None = None) -> float:
    """Central second difference of ``g_U`` in ``gamma``."""
    return (g_u(gamma + h, tau, quad) - 2.0 * g_u(gamma, tau, quad) + g_u(gamma - h, tau, quad)) / h**2


# ---------------------------------------------------------------------------
# scans


GAUSS_TAUS = (0.02, 0.1, 1.0)
BR_TAUS = (1.0, 0.1, 0.02)


def gaussian_scan(tau: float, xs, quad: QuadratureSpec | None = None):
    """``F_U(-tau + (pi^(1/4)/sqrt 2) x tau^(1/2); tau, 0)`` on ``xs``."""
    ev = _get(ScalingParams(tau), quad)
    args = -tau + math.pi**0.25 / math.sqrt(2.0) * np.asarray(xs, float) * math.sqrt(tau)
    return ev.fu_grid(args, 0.0)


def baik_rains_scan(tau: float, xs, w: float = 0.0, quad: QuadratureSpec | None = None):
    """``F_U(tau^(1/3) x; tau, 2 w tau^(2/3))`` on ``xs``."""
    ev = _get(ScalingParams(tau), quad)
    args = tau ** (1.0 / 3.0) * np.asarray(xs, float)
    return ev.fu_grid(args, 2.0 * w * tau ** (2.0 / 3.0))


def normal_distance(tau: float, xs, quad: QuadratureSpec | None = None) -> float:
    vals, _ = gaussian_scan(tau, xs, quad)
    return float(np.max(np.abs(vals - ndtr(np.asarray(xs, float)))))
