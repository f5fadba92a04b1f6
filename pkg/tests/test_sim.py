import math
from itertools import combinations

import numpy as np
import pytest
from scipy.stats import chisquare, kstest, poisson

from ringkpz.errors import DomainError
from ringkpz.sim import kernel
from ringkpz.sim.montecarlo import (
    RingState,
    SimEnsemble,
    evolve,
    mc_height_cdf,
    mc_two_point,
    mean_height,
    mean_height_identity,
    run_ensemble,
    sample_bernoulli,
    sample_uniform,
    wilson_interval,
)
from ringkpz.sim.oracle import configurations, ctmc_oracle, ring_generator, signed_profile

BACKENDS = ["python"] + (["cython"] if kernel.BACKEND == "cython" else [])


@pytest.fixture(scope="module")
def run63():
    return run_ensemble(6, 3, 2.0, SimEnsemble(11, 100_000))


def config_index(occ):
    return (occ * (1 << np.arange(occ.shape[-1]))).sum(axis=-1)


def test_uniform_full_ring(rng):
    s = sample_uniform(5, 5, rng)
    assert s.occupation.tolist() == [1] * 5 and s.counters.sum() == 0
    with pytest.raises(DomainError):
        sample_uniform(5, 6, rng)


def test_uniform_chi_square(rng):
    draws = np.array([sample_uniform(6, 3, rng).occupation for _ in range(100_000)])
    keys = config_index(draws)
    _, counts = np.unique(keys, return_counts=True)
    assert len(counts) == 20
    assert chisquare(counts).pvalue > 1e-3
    m = draws[:, 0].mean()
    assert abs(m - 0.5) <= 3 * math.sqrt(0.25 / len(draws))


def test_bernoulli(rng):
    occ = np.array([sample_bernoulli(50, 0.3, rng).occupation for _ in range(2000)])
    assert abs(occ.mean() - 0.3) <= 3 * math.sqrt(0.21 / occ.size)
    with pytest.raises(DomainError):
        sample_bernoulli(5, 1.5, rng)


def test_ring_state_validation():
    with pytest.raises(DomainError):
        RingState(np.zeros(4), np.zeros(5))


@pytest.mark.parametrize("backend", BACKENDS)
def test_full_ring_is_frozen(rng, backend):
    s = sample_uniform(6, 6, rng)
    out = evolve(s, 10.0, rng, backend)
    assert np.array_equal(out.occupation, s.occupation) and out.counters.sum() == 0
    assert out.time == 10.0


@pytest.mark.parametrize("backend", BACKENDS)
def test_conservation_and_monotone_counters(rng, backend):
    s = sample_uniform(10, 4, rng)
    a = evolve(s, 3.0, rng, backend)
    b = evolve(a, 5.0, rng, backend)
    assert a.n_particles == b.n_particles == 4
    assert np.all(b.counters >= a.counters)
    with pytest.raises(DomainError):
        evolve(b, 1.0, rng, backend)


def test_lone_particle_is_poisson():
    ens = SimEnsemble(5, 100_000)
    run = run_ensemble(8, 1, 3.0, ens)
    disp = run.counters.sum(axis=1)
    # discrete KS: compare against the Poisson CDF with a randomised continuity correction
    u = np.random.default_rng(1).random(len(disp))
    cont = poisson.cdf(disp - 1, 3.0) + u * poisson.pmf(disp, 3.0)
    assert kstest(cont, "uniform").pvalue > 1e-3


def test_backends_identical():
    if kernel.BACKEND != "cython":
        pytest.skip("compiled backend not built")
    ens = SimEnsemble(3, 50)
    a = run_ensemble(12, 5, 15.0, ens, backend="cython")
    b = run_ensemble(12, 5, 15.0, ens, backend="python")
    assert np.array_equal(a.final, b.final) and np.array_equal(a.counters, b.counters)


def test_reproducible_and_independent_of_workers():
    ens = SimEnsemble(99, 40)
    a = run_ensemble(8, 3, 4.0, ens, workers=1)
    b = run_ensemble(8, 3, 4.0, ens, workers=3)
    assert np.array_equal(a.counters, b.counters) and np.array_equal(a.initial, b.initial)
    c = run_ensemble(8, 3, 4.0, SimEnsemble(100, 40))
    assert not np.array_equal(a.counters, c.counters)


def test_ensemble_validation():
    with pytest.raises(DomainError):
        SimEnsemble(1, 0)
    with pytest.raises(DomainError):
        SimEnsemble(-1, 3)
    with pytest.raises(DomainError):
        SimEnsemble(1, 3, "flat")
    assert SimEnsemble(1, 3).config()["rng"] == "PCG64"


def test_height_shift_identity(run63):
    L, N = 6, 3
    for ell in (0, 2, -1):
        assert np.all(run63.heights(ell + L) - run63.heights(ell) == L - 2 * N)


def test_time_zero_matches_enumeration():
    ens = SimEnsemble(8, 20_000)
    c = mc_height_cdf(6, 3, 0.0, 2, ens)
    o = ctmc_oracle(6, 3, 0.0, 2)
    for b, lo, hi in zip(c.b, c.ci_low, c.ci_high):
        assert lo <= o.prob_ge(int(b)) <= hi


def test_stationary_configuration_law(run63):
    _, counts = np.unique(config_index(run63.final), return_counts=True)
    assert len(counts) == 20 and chisquare(counts).pvalue > 1e-3
    site = run63.final.sum(axis=0)
    assert chisquare(site).pvalue > 1e-3


def test_mean_current(run63):
    m, se = mean_height(run63, 1)
    assert abs(m - mean_height_identity(6, 3, 2.0, 1)) <= 3 * se


def test_oracle_vs_simulation(run63):
    c = mc_height_cdf(6, 3, 2.0, 1, SimEnsemble(11, 100_000), run=run63)
    o = ctmc_oracle(6, 3, 2.0, 1)
    pm_mc = -np.diff(np.append(c.p_hat, 0.0))
    pm_or = np.array([o.prob_ge(int(b)) - o.prob_ge(int(b) + 2) for b in c.b])
    tv = 0.5 * (np.abs(pm_mc - pm_or).sum() + (1 - pm_or.sum()))
    half = 0.5 * np.max(c.ci_high - c.ci_low)
    assert tv <= 3 * half


def test_wilson_interval():
    lo, hi = wilson_interval(0, 100)
    assert lo == 0 and 0 < hi < 0.07
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi


def test_two_point_initial_time():
    # at t = 0 the direct estimator of S(0;0) must match Cov(eta_0, eta_0) = rho - rho^2
    # and S(1;0) the enumeration value E[eta_1 eta_0] - rho^2
    ens = SimEnsemble(4, 50_000)
    tp = mc_two_point(6, 3, 0.0, ens)
    conf = configurations(6, 3)
    s0 = conf[:, 0].mean() - 0.25
    s1 = (conf[:, 1] * conf[:, 0]).mean() - 0.25
    assert abs(tp.direct[0] - s0) <= 1e-12
    assert abs(tp.direct[1] - s1) <= 3 * tp.direct_se[1] + 1e-12


def test_two_point_estimators_agree():
    tp = mc_two_point(16, 8, 4.0, SimEnsemble(6, 20_000))
    comb = np.sqrt(tp.direct_se**2 + tp.via_variance_se**2)
    assert np.all(np.abs(tp.direct - tp.via_variance) <= 3 * comb + 1e-12)
    assert abs(tp.sum_direct) <= 3 * tp.sum_direct_se + 1e-12


def test_oracle_generator_rows():
    q = ring_generator(6, 3)
    assert np.all(np.asarray(q.sum(axis=1)).ravel() == 0)


def test_oracle_mass_and_time_zero():
    o = ctmc_oracle(6, 3, 1.0, 0)
    assert abs(o.pmf.sum() - 1) <= 1e-12
    o0 = ctmc_oracle(6, 3, 0.0, 3)
    conf = configurations(6, 3)
    h = signed_profile(conf, 3)
    for b in o0.b:
        assert o0.prob_ge(int(b)) == pytest.approx((h >= b).mean(), abs=1e-15)


def test_oracle_guards():
    with pytest.raises(DomainError):
        ctmc_oracle(14, 7, 1.0, 0)
    with pytest.raises(DomainError):
        ctmc_oracle(6, 3, 1.0, 0, kmax=5)


def test_oracle_translation_shift():
    a = ctmc_oracle(6, 3, 0.8, 1)
    b = ctmc_oracle(6, 3, 0.8, 7)
    assert np.array_equal(a.b + 6 - 2 * 3, b.b) and np.allclose(a.p_ge, b.p_ge, atol=1e-14)
