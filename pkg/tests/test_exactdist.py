import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import poisson

from ringkpz.bethe import ModelParams, q_factor, solve_bethe_roots, substitute_z
from ringkpz.errors import DomainError
from ringkpz.exactdist import (
    ExactHeightDistribution,
    HeightQuery,
    KernelMatrix,
    QuadratureSpec,
    c2_log,
    fredholm_det,
    height_cdf_exact,
    k_from_b,
    kernel_matrix,
    lemma32_check,
    nxn_vs_fredholm_sides,
    nxn_transition_det,
    scaling_map,
)
from ringkpz.sim.oracle import ctmc_oracle

P63 = ModelParams(6, 3)


def roots_at(params, z):
    return solve_bethe_roots(params, substitute_z(params, z))


def f2_direct(roots, w, k, ell, t, side):
    """f_2 from its defining products, without logarithms."""
    N, rho = roots.params.N, roots.params.rho
    if side == "left":
        q = q_factor(roots, "right", w)
    else:
        v = roots.right
        q = np.prod([w - x for x in v if x != w])
    return q**2 * w ** (-2 * N - k + 2) * (w + 1) ** (-ell + k + 1) * np.exp(t * w) / (w + rho)


def test_query_parity_and_k():
    q = HeightQuery(P63, 1.0, 1, 3)
    assert q.k == 0 == k_from_b(1, 3)
    with pytest.raises(DomainError):
        HeightQuery(P63, 1.0, 0, 3)
    with pytest.raises(DomainError):
        QuadratureSpec(radius=1.2)
    with pytest.raises(DomainError):
        QuadratureSpec(nodes=17)


def test_c2_closed_form_two_sites():
    p = ModelParams(2, 1)
    roots = roots_at(p, 0.4 * np.exp(0.9j))
    u, v = roots.left[0], roots.right[0]
    for k, ell, t in [(0, 0, 0.5), (2, -1, 1.3), (-1, 3, 0.0)]:
        ref = (-u) ** k * (v + 1) ** (-ell + 1 + k) * np.exp(t * v) / (v - u)
        assert abs(np.exp(c2_log(roots, k, ell, t)) - ref) <= 1e-12 * abs(ref)


def test_c2_zero_exponents():
    p = ModelParams(7, 3)
    roots = roots_at(p, 0.5j)
    k = 1 - p.N
    ell = p.L - p.N + k
    ref = 1.0 / np.prod(roots.right[None, :] - roots.left[:, None])
    assert abs(np.exp(c2_log(roots, k, ell, 0.0)) - ref) <= 1e-12 * abs(ref)


def test_kernel_closed_form_two_sites():
    p = ModelParams(2, 1)
    roots = roots_at(p, 0.3 * np.exp(2.0j))
    u, v = roots.left[0], roots.right[0]
    k, ell, t = 1, 2, 0.7
    ref = f2_direct(roots, u, k, ell, t, "left") / ((u - v) ** 2 * f2_direct(roots, v, k, ell, t, "right"))
    for conj in (True, False):
        km = kernel_matrix(roots, k, ell, t, conjugated=conj)
        assert km.dim == 1
        assert abs(km.entries[0, 0] - ref) <= 1e-12 * abs(ref)
    assert abs(fredholm_det(kernel_matrix(roots, k, ell, t)).value - (1 + ref)) <= 1e-12 * abs(1 + ref)


def test_kernel_definition_and_conjugation():
    p = ModelParams(8, 4)
    roots = roots_at(p, 0.5 * np.exp(0.3j))
    k, ell, t = 1, 2, 1.5
    u, v = roots.left, roots.right
    fu = np.array([f2_direct(roots, x, k, ell, t, "left") for x in u])
    fv = np.array([f2_direct(roots, x, k, ell, t, "right") for x in v])
    ref = fu[:, None] * ((1 / ((u[:, None] - v[None, :]) * fv[None, :])) @ (1 / (u[None, :] - v[:, None])))
    det_ref = np.linalg.det(np.eye(4) + ref)
    raw = kernel_matrix(roots, k, ell, t, conjugated=False)
    assert np.allclose(raw.entries, ref, rtol=1e-10, atol=0)
    for conj in (True, False):
        d = fredholm_det(kernel_matrix(roots, k, ell, t, conjugated=conj)).value
        assert abs(d - det_ref) <= 1e-10 * abs(det_ref)


def test_fredholm_trivial_cases(rng):
    assert fredholm_det(KernelMatrix(np.zeros((3, 3)))).value == pytest.approx(1.0)
    assert fredholm_det(KernelMatrix(np.array([[0.3 - 0.2j]]))).value == pytest.approx(1.3 - 0.2j)
    x = rng.normal(size=6) + 1j * rng.normal(size=6)
    y = rng.normal(size=6) + 1j * rng.normal(size=6)
    d = fredholm_det(KernelMatrix(np.outer(x, y))).value
    assert abs(d - (1 + y @ x)) <= 1e-12 * abs(1 + y @ x)


def test_fredholm_bordered_factor(rng):
    a = rng.normal(size=(5, 3)) + 1j * rng.normal(size=(5, 3))
    d = fredholm_det(KernelMatrix(a @ a.T, factor=a)).value
    ref = np.linalg.det(np.eye(5) + a @ a.T)
    assert abs(d - ref) <= 1e-12 * abs(ref)


@pytest.mark.parametrize("k", [0, 1, 2])
@pytest.mark.parametrize("ell", [0, 3])
def test_nxn_to_kernel_identity(k, ell):
    p = ModelParams(8, 4)
    for j in range(3):
        roots = roots_at(p, 0.5 * np.exp(2j * math.pi * (j + 0.3) / 3))
        lhs, rhs = nxn_vs_fredholm_sides(roots, k, ell, 1.0)
        assert abs(lhs - rhs) <= 1e-8 * abs(rhs)


@pytest.mark.parametrize("L,N,tol", [(3, 1, 1e-12), (4, 2, 1e-11), (6, 3, 1e-10)])
def test_summation_identity(L, N, tol):
    p = ModelParams(L, N)
    roots = roots_at(p, 0.4 * np.exp(0.77j))
    assert lemma32_check(p, roots.right, roots.zbold) <= tol
    # any N roots of the polynomial qualify
    assert lemma32_check(p, roots.all[: N], roots.zbold) <= 10 * tol


def test_transition_det_static():
    p = ModelParams(5, 2)
    for a in (-1, 0, 1):
        r = nxn_transition_det(p, [-2, 0], 2, a, 0.0)
        assert r.probability == pytest.approx(1.0 if 0 >= a else 0.0, abs=1e-9)


def test_transition_det_lone_particle():
    r = nxn_transition_det(ModelParams(5, 1), [0], 1, 3, 1.0)
    assert abs(r.probability - poisson.sf(2, 1.0)) <= 1e-9


@pytest.mark.parametrize("a", [1, 2])
def test_transition_det_oracle(a):
    # Y = (-1, 0) on L = 4: sites 3 and 0 occupied.  x_2 >= a  <=>  h(a-1) >= a-1+2
    p = ModelParams(4, 2)
    r = nxn_transition_det(p, [-1, 0], 2, a, 0.7)
    o = ctmc_oracle(4, 2, 0.7, a - 1, initial=[1, 0, 0, 1])
    assert abs(r.probability - o.prob_ge(a - 1 + 2)) <= 1e-8


def _t0_enumeration(L, N, ell, b):
    hits = 0
    total = 0
    for occ in combinations(range(L), N):
        eta = [1 if i in occ else 0 for i in range(L)]
        h = sum(1 - 2 * eta[j % L] for j in range(1, ell + 1))
        hits += h >= b
        total += 1
    return hits / total


@pytest.mark.parametrize("ell", [0, 1, 2, 4])
def test_time_zero_enumeration(ell):
    ex = ExactHeightDistribution(P63, 0.0, ell)
    for b in range(-ell - 2, ell + 3):
        if (b - ell) % 2 == 0:
            assert ex.probability(b).probability == pytest.approx(_t0_enumeration(6, 3, ell, b), abs=1e-9)


def test_small_t_full_mass():
    r = height_cdf_exact(HeightQuery(P63, 0.1, 0, -6))
    assert r.probability == pytest.approx(1.0, abs=1e-8)


def test_against_oracle_t2_ell1():
    o = ctmc_oracle(6, 3, 2.0, 1)
    ex = ExactHeightDistribution(P63, 2.0, 1)
    err = max(abs(ex.probability(int(b)).probability - p) for b, p in zip(o.b, o.p_ge))
    assert err <= 1e-6


def test_monotone_and_mean_identity():
    t, ell = 2.0, 0
    ex = ExactHeightDistribution(P63, t, ell)
    bs = np.arange(-6, 30, 2)
    ps = np.array([ex.probability(int(b)).probability for b in bs])
    assert np.all(np.diff(ps) <= 1e-8)
    assert ps[0] == pytest.approx(1.0, abs=1e-9)
    # E h = b_min + 2 sum_{b > b_min} P(h >= b)
    mean = bs[0] + 2 * ps[1:].sum()
    rho = 0.5
    ref = (1 - 2 * rho) * ell + 2 * rho * (1 - rho) * t * (1 + 1 / 5)
    assert abs(mean - ref) <= 1e-6 * abs(ref)


def test_routes_and_imaginary_residue():
    ex = ExactHeightDistribution(P63, 0.5, 1)
    for b in (-1, 1, 3):
        r = ex.probability(b)
        assert r.route_gap <= 1e-8
        assert r.imag_residue <= 1e-8


@pytest.mark.slow
def test_radius_and_rotation_independence():
    p = ModelParams(12, 6)
    base = ExactHeightDistribution(p, 4.0, 0, QuadratureSpec(0.4, 128))
    other = ExactHeightDistribution(p, 4.0, 0, QuadratureSpec(0.6, 128))
    rot = ExactHeightDistribution(p, 4.0, 0, rotation=1)
    for b in (0, 2, 4, 6):
        v = base.probability(b).probability
        assert abs(v - other.probability(b).probability) <= 1e-8
        assert abs(v - rot.probability(b).probability) <= 1e-8


def test_tail_bracket_is_certified():
    # far tail: the value is bracketed by monotonicity and the bracket contains the oracle
    o = ctmc_oracle(6, 3, 2.0, 0)
    ex = ExactHeightDistribution(P63, 2.0, 0)
    r = ex.probability(int(o.b[-1]))
    assert abs(r.probability - o.p_ge[-1]) <= r.err + 1e-9
    assert r.err <= 1e-8


def test_scaling_map_half_density():
    sq = scaling_map(64, 32, 1.0, 0.0, 0.0)
    q = sq.query
    assert q.t == pytest.approx(2 * 64**1.5)
    assert q.ell == 0 and (q.b - q.ell) % 2 == 0
    assert abs(sq.x_realized) <= 2 * 0.25 ** (-2 / 3) * q.t ** (-1 / 3)
    w = 0.7
    sq = scaling_map(64, 32, 1.0, w, 0.3)
    assert sq.query.ell == round(2 * w * 0.25 ** (1 / 3) * sq.query.t ** (2 / 3))
    assert sq.gamma_realized == pytest.approx(2 * w, abs=1 / 64)


@given(st.integers(2, 200), st.floats(0.05, 3.0), st.floats(-2, 2), st.floats(-6, 6), st.data())
def test_scaling_map_parity(L, tau, w, x, data):
    N = data.draw(st.integers(1, L - 1))
    sq = scaling_map(L, N, tau, w, x)
    assert (sq.query.b - sq.query.ell) % 2 == 0
