"""Acceptance criteria, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line (collected again in the
terminal summary) and then asserts.  Run with ``pytest tests/test_acceptance.py``.
"""

import math
import time

import numpy as np
import pytest

from ringkpz.bethe import ModelParams, solve_bethe_roots, substitute_z
from ringkpz.cli import convergence_scan
from ringkpz.exactdist import ExactHeightDistribution, QuadratureSpec, lemma32_check, nxn_vs_fredholm_sides, scaling_map
from ringkpz.limitdist import LimitEvaluator, moments, normal_distance, tabulate_fu
from ringkpz.sim.montecarlo import (
    SimEnsemble,
    mc_height_cdf,
    mc_two_point,
    mean_height,
    mean_height_identity,
    run_ensemble,
)
from ringkpz.sim.oracle import ctmc_oracle

RESULTS: list[str] = []


def record(n: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def test_c01_oracle_equivalence():
    t0 = time.perf_counter()
    worst, count = 0.0, 0
    for t in (0.5, 2.0):
        for ell in (0, 1):
            o = ctmc_oracle(6, 3, t, ell)
            ex = ExactHeightDistribution(ModelParams(6, 3), t, ell)
            for b, p in zip(o.b, o.p_ge):
                worst = max(worst, abs(ex.probability(int(b)).probability - p))
                count += 1
    rt = time.perf_counter() - t0
    record(1, "exact vs CTMC oracle (L=6,N=3)", worst <= 1e-6,
           f"max |diff| {worst:.2e} over {count} points, {rt:.1f} s")


def test_c02_nxn_vs_fredholm():
    p = ModelParams(8, 4)
    worst = 0.0
    for j in range(8):
        z = 0.5 * np.exp(2j * math.pi * (j + 0.5) / 8)
        roots = solve_bethe_roots(p, substitute_z(p, z))
        for k in (0, 1, 2):
            for ell in (0, 3):
                lhs, rhs = nxn_vs_fredholm_sides(roots, k, ell, 1.0)
                worst = max(worst, abs(lhs - rhs) / abs(rhs))
    record(2, "N x N determinant vs C det(I+K) (L=8,N=4)", worst <= 1e-8, f"max rel err {worst:.2e}")


def test_c03_summation_identity():
    worst = 0.0
    for N, L in ((1, 3), (2, 4), (3, 6)):
        p = ModelParams(L, N)
        for z in (0.3 * np.exp(0.4j), 0.6 * np.exp(2.1j), -0.45):
            roots = solve_bethe_roots(p, substitute_z(p, z))
            worst = max(worst, lemma32_check(p, roots.right, roots.zbold))
    record(3, "enumeration sum vs determinant", worst <= 1e-10, f"max residual {worst:.2e}")


def test_c04_contour_robustness():
    p = ModelParams(12, 6)
    a = ExactHeightDistribution(p, 4.0, 0, QuadratureSpec(0.4))
    b = ExactHeightDistribution(p, 4.0, 0, QuadratureSpec(0.6))
    r = ExactHeightDistribution(p, 4.0, 0, rotation=1)
    d_rad = d_rot = 0.0
    for level in range(-6, 17, 2):
        v = a.probability(level).probability
        d_rad = max(d_rad, abs(v - b.probability(level).probability))
        d_rot = max(d_rot, abs(v - r.probability(level).probability))
    record(4, "radius 0.4 vs 0.6 and root rotation (L=12,N=6,t=4)", max(d_rad, d_rot) <= 1e-8,
           f"radius {d_rad:.2e}, rotation {d_rot:.2e}")


def test_c05_monte_carlo_agreement():
    t0 = time.perf_counter()
    q = scaling_map(32, 16, 1.0, 0.0, 0.0).query
    ens = SimEnsemble(2024, 100_000)
    cdf = mc_height_cdf(32, 16, q.t, q.ell, ens)
    ex = ExactHeightDistribution(q.params, q.t, q.ell)
    inside = [lo <= ex.probability(int(b)).probability <= hi
              for b, lo, hi in zip(cdf.b, cdf.ci_low, cdf.ci_high)]
    frac = float(np.mean(inside))
    rt = time.perf_counter() - t0
    record(5, "exact CDF inside 99% Wilson CI (L=32,N=16,tau=1, 1e5 replicas)", frac >= 0.99,
           f"{sum(inside)}/{len(inside)} points inside, {rt:.0f} s")


@pytest.fixture(scope="module")
def ev1():
    return LimitEvaluator(1.0)


def test_c06_fu_properties(ev1):
    dev = 0.0
    for x in np.linspace(-2.0, 2.0, 5):
        for g in np.linspace(-0.8, 0.8, 5):
            v = ev1.fu(x, g)[0]
            dev = max(dev, abs(v - ev1.fu(x, g + 1.0)[0]), abs(v - ev1.fu(x, -g)[0]))
    mean, _ = moments(tabulate_fu(1.0, 0.0))
    xs = np.arange(-12.0, 8.01, 0.25)
    v, _ = ev1.fu_grid(xs)
    mono = float(np.min(np.diff(v)))
    ends = max(v[0], 1.0 - v[-1])
    ok = dev <= 1e-6 and abs(mean + 1.0) <= 5e-3 and mono >= -1e-9 and ends <= 1e-5
    record(6, "F_U periodicity, symmetry, mean, monotonicity, endpoints", ok,
           f"5x5 deviation {dev:.1e}, mean {mean:.6f}, min step {mono:.1e}, endpoint gap {ends:.1e}")


def test_c07_derivative_consistency():
    rng = np.random.default_rng(7)
    worst = 0.0
    evs = {}
    for _ in range(20):
        tau = float(rng.choice([0.5, 1.0, 2.0]))
        ev = evs.setdefault(tau, LimitEvaluator(tau))
        m = 64
        j = int(rng.integers(m))
        x, g = float(rng.uniform(-3, 3)), float(rng.uniform(-1, 1))
        analytic = ev.integrand(j, m, x, g, derivative=True)
        fd = ev.finite_difference(j, m, x, g, h=1e-4)
        worst = max(worst, abs(analytic - fd) / max(1.0, abs(analytic)))
    record(7, "analytic x-derivative vs central difference (20 points)", worst <= 1e-6,
           f"max err {worst:.2e}")


def test_c08_gaussian_scan():
    # x = -3 maps to F_U at -9.6 for tau=4, inside the contour's reachable range
    xs = np.linspace(-3.0, 3.0, 61)
    d4, d1 = normal_distance(4.0, xs), normal_distance(1.0, xs)
    record(8, "Gaussian crossover scan", d4 <= 0.05 and d4 < d1, f"sup dist tau=4 {d4:.4f}, tau=1 {d1:.4f}")


def test_c09_finite_to_limit_convergence():
    rows = convergence_scan(0.5, 1.0, 0.0, [32, 64, 128])
    d = {r.L: r.distance for r in rows}
    ok = all(math.isfinite(v) for v in d.values()) and d[128] <= d[32]
    detail = ", ".join(f"L={r.L} {r.distance:.4f} ({r.runtime:.0f} s)" for r in rows)
    record(9, "sup distance exact CDF_L vs F_U", ok, detail)


def test_c10_mean_identity():
    target = {ell: mean_height_identity(6, 3, 2.0, ell) for ell in (0, 1)}
    run = run_ensemble(6, 3, 2.0, SimEnsemble(10, 100_000))
    z_sim, d_exact = 0.0, 0.0
    for ell in (0, 1):
        m, se = mean_height(run, ell)
        z_sim = max(z_sim, abs(m - target[ell]) / se)
        # E h = b0 + 2 sum_{j >= 1} P(h >= b0 + 2j), with b0 the bottom of the support
        o = ctmc_oracle(6, 3, 2.0, ell)
        ex = ExactHeightDistribution(ModelParams(6, 3), 2.0, ell)
        b0 = int(o.b[0])
        mean = b0 + 2.0 * sum(ex.probability(int(b)).probability for b in o.b[1:])
        d_exact = max(d_exact, abs(mean - target[ell]))
    record(10, "mean height identity (L=6,N=3,t=2)", z_sim <= 3.0 and d_exact <= 1e-6,
           f"simulated max |z| {z_sim:.2f}, exact max |diff| {d_exact:.2e}")


def test_c11_two_point_consistency():
    tp = mc_two_point(16, 8, 4.0, SimEnsemble(11, 50_000))
    comb = np.sqrt(tp.direct_se**2 + tp.via_variance_se**2)
    z_pair = float(np.max(np.abs(tp.direct - tp.via_variance) / comb))
    z_sum = abs(tp.sum_direct) / tp.sum_direct_se
    record(11, "two-point estimators (L=16,N=8,t=4)", z_pair <= 3.0 and z_sum <= 3.0,
           f"max pair |z| {z_pair:.2f}, sum |z| {z_sum:.2f}")
