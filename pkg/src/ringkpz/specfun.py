"""Polylogarithms of half-integer order, the constant ``B(z)`` and the
Gaussian tail integral that enters the limiting kernel phase.

Only the orders 1/2, 3/2 and 5/2 are supported.  The principal branch with
cut ``[1, inf)`` is used throughout.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import erfcx

from .errors import DomainError
from .quadrature import double_exponential

ORDERS = (0.5, 1.5, 2.5)
SERIES_RADIUS = 0.8
TAIL_SERIES_RADIUS = 0.98
_SERIES_RTOL = 1e-17
_SQRT_HALF_PI = math.sqrt(0.5 * math.pi)


def _check_order(s):
    s = float(s)
    if s not in ORDERS:
        raise DomainError(f"polylog order must be one of {ORDERS}, got {s}")
    return s


def _as_complex(z):
    arr = np.asarray(z, dtype=complex)
    return arr, arr.ndim == 0


def polylog_series(s, z, max_terms=5000):
    """Power series ``sum_k z^k / k^s``; intended for ``|z| <= 0.8``."""
    s = _check_order(s)
    z, scalar = _as_complex(z)
    z = np.atleast_1d(z)
    total = np.zeros_like(z)
    power = np.ones_like(z)
    active = np.ones(z.shape, dtype=bool)
    for k in range(1, max_terms + 1):
        power = power * z
        term = power / k**s
        total = total + np.where(active, term, 0.0)
        active &= ~(np.abs(term) <= _SERIES_RTOL * np.abs(total))
        if not active.any():
            break
    return total[0] if scalar else total


def polylog_integral(s, z, tol=1e-13):
    """Integral continuation ``z/Gamma(s) int_0^inf x^(s-1) / (e^x - z) dx``.

    Substituting ``x = u^2`` removes the endpoint singularity at order 1/2.
    """
    s = _check_order(s)
    z, scalar = _as_complex(z)
    z = np.atleast_1d(z)
    _check_cut(z)
    power = 2.0 * s - 1.0
    zc = z[:, None]

    def integrand(u):
        g = np.exp(-u * u)
        return 2.0 * u**power * g / (1.0 - zc * g)

    scale = np.maximum(np.abs(z), 1e-300) / math.gamma(s)
    val, _ = double_exponential(integrand, 0.0, math.inf, tol=tol / scale.max())
    out = z / math.gamma(s) * val
    return out[0] if scalar else out


def _check_cut(z):
    bad = (z.imag == 0.0) & (z.real >= 1.0)
    if np.any(bad):
        raise DomainError("polylog argument on the branch cut [1, inf)")


def polylog(s, z):
    """Principal-branch ``Li_s(z)`` for ``s`` in {1/2, 3/2, 5/2}.

    Series for ``|z| <= 0.8``, integral representation elsewhere.  Accepts
    scalars or arrays.
    """
    s = _check_order(s)
    z, scalar = _as_complex(z)
    flat = np.atleast_1d(z).ravel()
    _check_cut(flat)
    out = np.empty_like(flat)
    near = np.abs(flat) <= SERIES_RADIUS
    if near.any():
        out[near] = polylog_series(s, flat[near])
    if (~near).any():
        out[~near] = polylog_integral(s, flat[~near])
    if scalar:
        return complex(out[0])
    return out.reshape(z.shape)


def big_b(z, tol=1e-13):
    """``B(z) = (1/4 pi) int_0^z Li_{1/2}(y)^2 / y dy`` on the radial segment.

    The integrand near 0 behaves like ``y`` so no endpoint treatment is
    needed.  Requires ``|z| < 1``.
    """
    z, scalar = _as_complex(z)
    flat = np.atleast_1d(z).ravel()
    if np.any(np.abs(flat) >= 1.0):
        raise DomainError("B(z) requires |z| < 1")
    zc = flat[:, None]

    def integrand(s):
        li = polylog(0.5, zc * s[None, :])
        return li * li / s

    val, _ = double_exponential(integrand, 0.0, 1.0, tol=4.0 * math.pi * tol)
    out = val / (4.0 * math.pi)
    out = np.where(flat == 0, 0.0, out)
    if scalar:
        return complex(out[0])
    return out.reshape(z.shape)


def phi_tail_series(xi):
    """Termwise integration of the Li_{1/2} series against Gaussians.

    ``int_{-inf}^xi e^{-k w^2/2} dw = sqrt(pi/(2k)) erfc(-xi sqrt(k/2))``, so
    the tail integral is ``sum_k sqrt(pi/2)/k * erfcx(w_k) * q^k`` with
    ``q = exp(-xi^2/2)``.  Valid when ``|q| < 1``.
    """
    xi, scalar = _as_complex(xi)
    xi = np.atleast_1d(xi)
    q = np.exp(-0.5 * xi * xi)
    if np.any(np.abs(q) >= 1.0):
        raise DomainError("series route needs |exp(-xi^2/2)| < 1")
    total = np.zeros_like(xi)
    qk = np.ones_like(xi)
    active = np.ones(xi.shape, dtype=bool)
    for k in range(1, 5000):
        qk = qk * q
        term = _SQRT_HALF_PI / k * erfcx(-xi * math.sqrt(0.5 * k)) * qk
        total = total + np.where(active, term, 0.0)
        active &= ~(np.abs(term) <= _SERIES_RTOL * np.abs(total))
        if not active.any():
            break
    return total[0] if scalar else total


def phi_tail_quad(xi, tol=1e-13):
    """Tail integral by exp-sinh quadrature along the horizontal ray."""
    xi = complex(xi)
    y = xi.imag

    def integrand(s):
        w = s + 1j * y
        return polylog(0.5, np.exp(-0.5 * w * w))

    val, _ = double_exponential(integrand, -math.inf, xi.real, tol=tol)
    return complex(val)


def phi_tail_integral(xi):
    """``int_{-inf}^{xi} Li_{1/2}(exp(-w^2/2)) dw`` along ``Im w = Im xi``.

    Requires ``Re xi < 0``; the path then never meets the imaginary axis
    where the polylog argument reaches its cut.  Vectorised over ``xi``.
    """
    xi, scalar = _as_complex(xi)
    flat = np.atleast_1d(xi).ravel()
    if np.any(flat.real >= 0.0):
        raise DomainError("phi_tail_integral requires Re(xi) < 0")
    out = np.empty_like(flat)
    q = np.abs(np.exp(-0.5 * flat * flat))
    # the erfcx series converges geometrically in |q|; 0.98 needs ~2000 terms
    series = q <= TAIL_SERIES_RADIUS
    if series.any():
        out[series] = phi_tail_series(flat[series])
    for i in np.flatnonzero(~series):
        out[i] = phi_tail_quad(flat[i])
    if scalar:
        return complex(out[0])
    return out.reshape(xi.shape)
