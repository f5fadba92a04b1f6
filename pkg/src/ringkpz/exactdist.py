"""Exact finite-ring height distribution for the uniform initial condition.

``P(h_t(l) >= b)`` is a contour integral over ``|z| = r`` of

    -(r0^-L / C(L,N)) z^-1  Delta_k [ C(zbold; k, l+1) det(I + K(zbold; k, l+1)) ]

with ``zbold^L = (-1)^N r0^L z`` and ``k = 1 - (b - l)/2``.  Every product over
Bethe roots is accumulated as a sum of logarithms and the kernel is used in
its symmetric conjugated form ``A A^T`` with
``A[u, v] = sqrt(f(u)/f(v)) / (u - v)``.

The module also carries the N x N transition-determinant formula for a
deterministic initial condition and the two summation/representation
identities that connect it to the kernel form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np
import scipy.linalg as sla
from scipy.special import gammaln

from .bethe import BetheRootSet, ModelParams, solve_bethe_roots, substitute_z
from .errors import DomainError, KernelOverflowError, NonConvergenceError, NumericalError
from .parallel import ordered_map

_LOG_MAX = 700.0
MAX_NODES = 8192
STALL_NODES = 1024
ESCALATED_RADIUS = 0.9
TAIL_BOUND = 1e-8


@dataclass(frozen=True)
class QuadratureSpec:
    radius: float = 0.5
    nodes: int = 128

    def __post_init__(self):
        if not (0.0 < self.radius < 1.0):
            raise DomainError("contour radius must lie in (0, 1)")
        if self.nodes < 16 or self.nodes % 2:
            raise DomainError("node count must be even and at least 16")


@dataclass(frozen=True)
class HeightQuery:
    params: ModelParams
    t: float
    ell: int
    b: int

    def __post_init__(self):
        if (self.b - self.ell) % 2:
            raise DomainError(f"b={self.b} and ell={self.ell} must have the same parity")
        if self.t < 0:
            raise DomainError("t must be nonnegative")

    @property
    def k(self) -> int:
        return k_from_b(self.ell, self.b)


def k_from_b(ell: int, b: int) -> int:
    if (b - ell) % 2:
        raise DomainError("b and ell must have the same parity")
    return 1 - (b - ell) // 2


# ---------------------------------------------------------------------------
# C_N and the kernel


def _log_powers(roots: BetheRootSet):
    u, v = roots.left, roots.right
    return np.log(-u), np.log(u), np.log(u + 1.0), np.log(v), np.log(v + 1.0)


def c2_log(roots: BetheRootSet, k: int, ell: int, t: float) -> complex:
    """``log C_N(zbold; k, ell)`` as a sum of principal logarithms."""
    L, N = roots.params.L, roots.params.N
    u, v = roots.left, roots.right
    s = (k + N - 1) * np.log(-u).sum()
    s += ((-ell + L - N + k) * np.log(v + 1.0) + t * v).sum()
    s -= np.log(v[None, :] - u[:, None]).sum()
    return complex(s)


def log_f2(roots: BetheRootSet, k: int, ell: int, t: float):
    """``log f_2`` on the left and right root sets."""
    N = roots.params.N
    rho = roots.params.rho
    u, v = roots.left, roots.right

    def common(w):
        return ((-2 * N - k + 2) * np.log(w) + (-ell + k + 1) * np.log(w + 1.0)
                + t * w - np.log(w + rho))

    lq_u = np.log(u[:, None] - v[None, :]).sum(axis=1)
    dv = v[:, None] - v[None, :]
    np.fill_diagonal(dv, 1.0)
    lq_v = np.log(dv).sum(axis=1)
    return 2.0 * lq_u + common(u), 2.0 * lq_v + common(v)


@dataclass
class KernelMatrix:
    """Dense kernel on the left root set.

    ``scale`` is a log-magnitude offset already removed from the entries
    (zero when entries are stored as is).  When the kernel was assembled in
    conjugated form ``A A^T`` the factor ``A`` is kept as well; the
    determinant is then taken from the bordered matrix
    ``[[I, A], [-A^T, I]]``, which avoids the rounding of the product.
    """

    entries: np.ndarray
    scale: float = 0.0
    factor: np.ndarray | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def _half_factor(roots: BetheRootSet, lf_u, lf_v):
    expo = 0.5 * lf_u[:, None] - 0.5 * lf_v[None, :]
    if np.any(expo.real > _LOG_MAX):
        raise KernelOverflowError(
            f"kernel exponent {expo.real.max():.1f} exceeds double range")
    return np.exp(expo) / (roots.left[:, None] - roots.right[None, :])


def kernel_matrix(roots: BetheRootSet, k: int, ell: int, t: float,
                  conjugated: bool = True) -> KernelMatrix:
    """``K(u, u') = f(u) sum_v 1 / ((u - v)(u' - v) f(v))`` on the left roots.

    The conjugated assembly ``sqrt(f(u)) [...] sqrt(f(u'))`` has the same
    determinant and keeps entries in range at large ``L``.
    """
    lf_u, lf_v = log_f2(roots, k, ell, t)
    if conjugated:
        a = _half_factor(roots, lf_u, lf_v)
        return KernelMatrix(a @ a.T, factor=a)
    expo = lf_u[:, None] - lf_v[None, :]
    if np.any(expo.real > _LOG_MAX):
        raise KernelOverflowError("raw kernel entry exceeds double range")
    cauchy = 1.0 / (roots.left[:, None] - roots.right[None, :])
    return KernelMatrix((np.exp(expo) * cauchy) @ cauchy.T)


@dataclass(frozen=True)
class FredholmDet:
    log_abs: float
    phase: float

    @property
    def log(self) -> complex:
        return complex(self.log_abs, self.phase)

    @property
    def value(self) -> complex:
        if self.log_abs > _LOG_MAX:
            raise OverflowError("determinant not representable")
        return complex(np.exp(self.log))


def _bordered(a):
    n, m = a.shape
    return np.block([[np.eye(n), a], [-a.T, np.eye(m)]])


def _lu_logdet(mat):
    """Pivoted LU of ``mat`` and its determinant as (log-magnitude, phase)."""
    n = mat.shape[0]
    lu, piv = sla.lu_factor(mat, check_finite=False)
    d = np.diag(lu)
    if np.any(np.abs(d) < 1e-300):
        raise NumericalError("singular pivot in det(I + K)")
    swaps = int(np.count_nonzero(piv != np.arange(n)))
    phase = float(np.angle(d).sum()) + math.pi * (swaps % 2)
    return (lu, piv), FredholmDet(float(np.log(np.abs(d)).sum()), math.remainder(phase, 2 * math.pi))


def fredholm_det(m: KernelMatrix) -> FredholmDet:
    """``det(I + K)`` by pivoted LU, returned as (log-magnitude, phase)."""
    if m.dim == 0:
        return FredholmDet(0.0, 0.0)
    mat = _bordered(m.factor) if m.factor is not None else np.eye(m.dim) + m.entries
    if not np.all(np.isfinite(mat)):
        raise NumericalError("kernel has non-finite entries")
    return _lu_logdet(mat)[1]


# ---------------------------------------------------------------------------
# the contour integrand


def delta_k_terms(roots: BetheRootSet, k: int, ell1: int, t: float, log_shift: complex = 0.0):
    """``Delta_k [C det(I+K)]`` at one ``zbold``, evaluated two ways.

    ``ell1`` is the kernel's site argument (``ell + 1`` in the height
    formula).  ``log_shift`` is added to ``log C`` before exponentiating.

    Returns ``(direct, factored)``: the plain two-point difference with both
    kernels assembled independently, and the product-identity form
    ``C_k D_k (sigma + delta + sigma*delta)`` with
    ``sigma = prod(-u) prod(v+1) - 1`` and
    ``delta = det(I + (I+K_k)^-1 (K_{k+1} - K_k)) - 1``.
    """
    lc0 = c2_log(roots, k, ell1, t) + log_shift
    lc1 = c2_log(roots, k + 1, ell1, t) + log_shift
    lf_u, lf_v = log_f2(roots, k, ell1, t)
    a0 = _half_factor(roots, lf_u, lf_v)
    m0 = _bordered(a0)
    if not np.all(np.isfinite(m0)):
        raise NumericalError("kernel has non-finite entries")
    lu0, d0 = _lu_logdet(m0)
    d1 = fredholm_det(kernel_matrix(roots, k + 1, ell1, t))
    direct = np.exp(lc1 + d1.log) - np.exp(lc0 + d0.log)

    u, v = roots.left, roots.right
    n = len(u)
    sigma = np.expm1(np.log(-u).sum() + np.log(v + 1.0).sum())
    # K_{k+1} = (A0 + B) A0^T in the k-frame, B = A0 * (r_u/r_v - 1), r_w = (w+1)/w.
    # In bordered form this is a rank-N change of the upper-right block.
    b = a0 * ((v[None, :] - u[:, None]) / (u[:, None] * (v[None, :] + 1.0)))
    rhs = np.vstack([b, np.zeros((len(v), len(v)), dtype=complex)])
    x = sla.lu_solve(lu0, rhs, check_finite=False)[n:]
    sign, logabs = np.linalg.slogdet(np.eye(len(v)) + x)
    delta = np.expm1(np.log(sign) + logabs)
    factored = np.exp(lc0 + d0.log) * (sigma + delta + sigma * delta)
    return complex(direct), complex(factored)


def _t0_range(params: ModelParams, ell: int):
    """Smallest and largest value of ``h_0(ell)`` over all configurations."""
    L, N = params.L, params.N
    n = abs(ell)
    q, r = divmod(n, L)
    lo_n, hi_n = max(0, N - (L - r)), min(N, r)
    vals = (q * (L - 2 * N) + r - 2 * hi_n, q * (L - 2 * N) + r - 2 * lo_n)
    if ell < 0:
        vals = (-vals[1], -vals[0])
    return vals


@dataclass
class ExactResult:
    b: int
    probability: float
    imag_residue: float
    nodes_used: int
    route_gap: float
    raw: complex = field(repr=False, default=0j)
    err: float = 0.0  # quadrature change at acceptance, or tail-closure half-width


class ExactHeightDistribution:
    """Evaluator of ``P(h_t(ell) >= b)`` for fixed ``(L, N, t, ell)``.

    Bethe roots are cached per contour node and shared across ``b``.  Node
    counts double until two successive trapezoid sums differ by less than
    ``tol``.  ``rotation`` selects the branch ``zbold -> zbold e^{2 pi i m/L}``
    used for the substitution; the integrand does not depend on it.

    Far in the tails the contour sum cancels below double precision.  A
    failed evaluation is retried on the wider contour ``ESCALATED_RADIUS``,
    where the cancellation is milder; if that also fails, monotonicity of
    ``b -> P(h >= b)`` brackets the value between a converged neighbour and
    0 (or 1), and the midpoint is returned when the bracket is narrower than
    ``2 * tail_bound``.
    """

    def __init__(self, params: ModelParams, t: float, ell: int,
                 quad: QuadratureSpec | None = None, tol: float = 1e-9,
                 rotation: int = 0, check_routes: bool = True, route_tol: float = 1e-8,
                 escalate: bool = True, tail_bound: float = TAIL_BOUND):
        self.params = params
        self.t = float(t)
        self.ell = int(ell)
        self.quad = quad or QuadratureSpec()
        self.tol = tol
        self.rotation = rotation
        self.check_routes = check_routes
        self.route_tol = route_tol
        self._roots: dict[Fraction, BetheRootSet] = {}
        self._terms: dict[tuple[int, Fraction], tuple[complex, complex]] = {}
        self._memo: dict[int, ExactResult] = {}
        self.tail_bound = tail_bound
        self._wide = None
        if escalate and self.quad.radius < ESCALATED_RADIUS:
            self._wide = ExactHeightDistribution(
                params, t, ell, QuadratureSpec(ESCALATED_RADIUS, self.quad.nodes), tol, rotation,
                check_routes, route_tol, escalate=False)
        L, N = params.L, params.N
        self._log_pref = -L * params.log_r0 - float(gammaln(L + 1) - gammaln(N + 1) - gammaln(L - N + 1))

    def _root_at(self, frac: Fraction) -> BetheRootSet:
        roots = self._roots.get(frac)
        if roots is None:
            z = self.quad.radius * np.exp(2j * math.pi * float(frac))
            zb = substitute_z(self.params, z, self.rotation)
            roots = solve_bethe_roots(self.params, zb)
            self._roots[frac] = roots
        return roots

    def _node_values(self, k: int, m: int):
        fracs = [Fraction(j, m) for j in range(m)]
        todo = [f for f in fracs if (k, f) not in self._terms]

        def work(frac):
            roots = self._root_at(frac)
            z = self.quad.radius * np.exp(2j * math.pi * float(frac))
            d1, d2 = delta_k_terms(roots, k, self.ell + 1, self.t, self._log_pref)
            return -d1 / z, -d2 / z

        for frac, val in zip(todo, ordered_map(work, todo)):
            self._terms[(k, frac)] = val
        vals = np.array([self._terms[(k, f)] for f in fracs])
        return vals[:, 0], vals[:, 1]

    def _contour(self, b: int) -> ExactResult:
        k = k_from_b(self.ell, b)
        if self.t == 0.0:
            lo, hi = _t0_range(self.params, self.ell)
            if b <= lo:
                return ExactResult(b, 1.0, 0.0, 0, 0.0, 1.0)
            if b > hi:
                return ExactResult(b, 0.0, 0.0, 0, 0.0, 0.0)
        m = self.quad.nodes
        prev = None
        last_change = math.inf
        while True:
            direct, factored = self._node_values(k, m)
            val = factored.mean()
            change = abs(val - prev) if prev is not None else math.inf
            if change < self.tol:
                break
            # trapezoid errors fall geometrically; a change that stops shrinking is rounding noise
            stalled = m >= STALL_NODES and change >= last_change
            if stalled and change <= self.tail_bound:
                break  # noise floor already inside the error budget
            if stalled or 2 * m > MAX_NODES:
                raise NonConvergenceError(
                    f"contour quadrature not converged at {m} nodes (change {change:.2e})")
            prev, last_change = val, change
            m *= 2
        gap = abs(direct.mean() - val)
        if self.check_routes and gap > self.route_tol:
            raise NumericalError(f"Delta_k routes disagree by {gap:.2e}")
        if abs(val.imag) > 1e-8:
            raise NumericalError(f"imaginary residue {abs(val.imag):.2e} in probability")
        p = float(val.real)
        if p < -1e-8 or p > 1 + 1e-8:
            raise NumericalError(f"probability {p!r} outside [0, 1]")
        return ExactResult(b, min(max(p, 0.0), 1.0), abs(val.imag), m, gap, complex(val), change)

    def _direct(self, b: int) -> ExactResult:
        try:
            return self._contour(b)
        except NumericalError:
            if self._wide is None:
                raise
            return self._wide._contour(b)

    def _known_bracket(self, b: int) -> ExactResult | None:
        lo, hi, ref = 0.0, 1.0, None
        for b2, r in self._memo.items():
            if b2 < b and r.probability + r.err < hi:
                hi, ref = r.probability + r.err, r
            elif b2 > b and r.probability - r.err > lo:
                lo, ref = r.probability - r.err, r
        if ref is None or min(hi, 1.0 - lo) > 2 * self.tail_bound:
            return None
        centre = 0.5 * hi if hi <= 2 * self.tail_bound else 0.5 * (1.0 + lo)
        half = 0.5 * hi if hi <= 2 * self.tail_bound else 0.5 * (1.0 - lo)
        return ExactResult(b, centre, 0.0, ref.nodes_used, 0.0, complex(centre), half)

    def _closed_tail(self, b: int, steps: int = 40) -> ExactResult:
        known = self._known_bracket(b)
        if known is not None:
            return known
        for sign in (-1, 1):
            for j in range(1, steps + 1):
                try:
                    ref = self._direct(b + 2 * sign * j)
                except NumericalError:
                    continue
                self._memo.setdefault(b + 2 * sign * j, ref)
                # sign -1: 0 <= P(b) <= P(b - 2j);  sign +1: P(b + 2j) <= P(b) <= 1
                width = ref.probability if sign < 0 else 1.0 - ref.probability
                if width > 2 * self.tail_bound:
                    break
                centre = 0.5 * width if sign < 0 else 1.0 - 0.5 * width
                return ExactResult(b, centre, 0.0, ref.nodes_used, 0.0, complex(centre), 0.5 * width + ref.err)
        raise NonConvergenceError(
            f"contour not converged at b={b} and no monotone bracket narrower than {2 * self.tail_bound:g}")

    def probability(self, b: int) -> ExactResult:
        b = int(b)
        hit = self._memo.get(b)
        if hit is None:
            try:
                hit = self._direct(b)
            except NumericalError:
                hit = self._closed_tail(b)
            self._memo[b] = hit
        return hit

    def probabilities(self, bs) -> list[ExactResult]:
        return [self.probability(int(b)) for b in bs]


def height_cdf_exact(q: HeightQuery, quad: QuadratureSpec | None = None, **kw) -> ExactResult:
    """``P(h_t(ell) >= b)`` for a single query."""
    return ExactHeightDistribution(q.params, q.t, q.ell, quad, **kw).probability(q.b)


# ---------------------------------------------------------------------------
# scaling map


@dataclass(frozen=True)
class ScaledQuery:
    query: HeightQuery
    x_target: float
    x_realized: float
    gamma_realized: float


def height_scale(rho: float, t: float):
    """Centre and (positive) width of the height fluctuation at time ``t``,
    excluding the ``(1 - 2 rho) l`` drift."""
    return 2 * rho * (1 - rho) * t, 2 * (rho * (1 - rho)) ** (2 / 3) * t ** (1 / 3)


def scaling_map(L: int, N: int, tau: float, w: float, x: float) -> ScaledQuery:
    """Relaxation-scale parameters ``(t, l, b)`` for ``(tau, w, x)``.

    ``b`` is the integer of the parity of ``l`` nearest to the height at
    fluctuation level ``x``; the level actually realised is reported.
    """
    params = ModelParams(L, N)
    rho = params.rho
    t = tau / math.sqrt(rho * (1 - rho)) * L**1.5
    ell = int(round((1 - 2 * rho) * t + 2 * w * (rho * (1 - rho)) ** (1 / 3) * t ** (2 / 3)))
    centre, width = height_scale(rho, t)
    centre += (1 - 2 * rho) * ell
    target = centre - width * x
    b = ell + 2 * int(round((target - ell) / 2))
    x_real = (centre - b) / width
    gamma = (ell - (1 - 2 * rho) * t) / L
    return ScaledQuery(HeightQuery(params, t, ell, b), x, x_real, gamma)


# ---------------------------------------------------------------------------
# N x N transition determinant and the two identities


def _log_pow(w, n):
    return n * np.log(w)


def transition_matrix(roots_all: np.ndarray, params: ModelParams, kprime: int,
                      y, a: int, t: float) -> np.ndarray:
    """``[(1/L) sum_w w^(j-i-k'+1) (w+1)^(y_j-j-a+k'+1) e^(tw) / (w+rho)]_{i,j}``."""
    L, N = params.L, params.N
    w = roots_all
    i = np.arange(1, N + 1)[:, None, None]
    j = np.arange(1, N + 1)[None, :, None]
    y = np.asarray(y)[None, :, None]
    expo = ((j - i - kprime + 1) * np.log(w) + (y - j - a + kprime + 1) * np.log(w + 1.0)
            + t * w - np.log(w + params.rho))
    return np.exp(expo).sum(axis=-1) / L


def _check_x_config(y, L):
    y = list(y)
    if any(y[i] >= y[i + 1] for i in range(len(y) - 1)) or y[-1] >= y[0] + L:
        raise DomainError("initial configuration must satisfy y_1 < ... < y_N < y_1 + L")


@dataclass
class TransitionResult:
    probability: float
    imag_residue: float
    nodes_used: int


def nxn_transition_det(params: ModelParams, y, kprime: int, a: int, t: float,
                       quad: QuadratureSpec | None = None, tol: float = 1e-8) -> TransitionResult:
    """``P_Y(x_{k'}(t) >= a)`` from the N x N determinant contour formula."""
    quad = quad or QuadratureSpec()
    N = params.N
    if len(y) != N:
        raise DomainError("initial configuration must have N entries")
    _check_x_config(y, params.L)
    if not (1 <= kprime <= N):
        raise DomainError("k' must lie in 1..N")
    sign = (-1) ** ((kprime - 1) * (N + 1))
    m = quad.nodes
    prev = None
    cache: dict[Fraction, complex] = {}
    while True:
        vals = []
        for jn in range(m):
            frac = Fraction(jn, m)
            if frac not in cache:
                z = quad.radius * np.exp(2j * math.pi * float(frac))
                roots = solve_bethe_roots(params, substitute_z(params, z))
                mat = transition_matrix(roots.all, params, kprime, y, a, t)
                cache[frac] = np.exp((kprime - 1) * roots.log_zl) * np.linalg.det(mat)
            vals.append(cache[frac])
        val = sign * np.mean(vals)
        if prev is not None and abs(val - prev) < tol:
            break
        if 2 * m > MAX_NODES:
            raise NonConvergenceError("transition determinant quadrature did not converge")
        prev = val
        m *= 2
    if abs(val.imag) > 1e-9:
        raise NumericalError(f"imaginary residue {abs(val.imag):.2e}")
    return TransitionResult(min(max(float(val.real), 0.0), 1.0), abs(val.imag), m)


def nxn_vs_fredholm_sides(roots: BetheRootSet, k: int, ell: int, t: float):
    """Both sides of the determinant-to-Fredholm identity at one ``zbold``.

    Left: ``(-1)^((k-1)(N+1)) zbold^((k+N-1)L) det[transition matrix]`` for the
    step configuration ``y_j = j - N`` with ``k' = k + N``, ``a = ell + 1``.
    Right: ``C_N(zbold; k, ell+1) det(I + K(zbold; k, ell+1))``.
    """
    params = roots.params
    N = params.N
    y = np.arange(1, N + 1) - N
    mat = transition_matrix(roots.all, params, k + N, y, ell + 1, t)
    lhs = (-1) ** ((k - 1) * (N + 1)) * np.exp((k + N - 1) * roots.log_zl) * np.linalg.det(mat)
    det = fredholm_det(kernel_matrix(roots, k, ell + 1, t))
    rhs = np.exp(c2_log(roots, k, ell + 1, t) + det.log)
    return complex(lhs), complex(rhs)


def lemma32_check(params: ModelParams, w, zbold: complex) -> float:
    """Relative residual of the sum-over-initial-configurations identity.

    ``w`` holds ``N`` Bethe roots of ``q_zbold``.
    """
    L, N = params.L, params.N
    if math.comb(L, N) > 10**6:
        raise DomainError("enumeration of initial configurations exceeds 1e6")
    w = np.asarray(w, dtype=complex)
    if w.shape != (N,):
        raise DomainError("need exactly N roots")
    j = np.arange(1, N + 1)
    ys = np.array(list(combinations(range(-L + 1, 1), N)))
    # entries w_i^j (w_i+1)^(y_j - j), one matrix per configuration
    mats = w[None, :, None] ** j[None, None, :] * (w[None, :, None] + 1.0) ** (ys[:, None, :] - j[None, None, :])
    lhs = np.linalg.det(mats).sum()
    first = np.linalg.det(w[:, None] ** (j[None, :] - 1) * (w[:, None] + 1.0) ** (-N + 1))
    second = np.linalg.det(w[:, None] ** j[None, :] * (w[:, None] + 1.0) ** (-N))
    zl = complex(zbold) ** L
    rhs = first - (-1) ** (N - 1) * second / zl
    return float(abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300))
