"""Monte Carlo simulation of ring TASEP and a small-system exact oracle."""

from .kernel import BACKEND, get_advance
from .montecarlo import (
    EnsembleRun,
    McCdf,
    RingState,
    SimEnsemble,
    TwoPoint,
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
from .oracle import OracleResult, configurations, ctmc_oracle, ring_generator, signed_profile

__all__ = [
    "BACKEND", "get_advance", "EnsembleRun", "McCdf", "RingState", "SimEnsemble", "TwoPoint",
    "evolve", "mc_height_cdf", "mc_two_point", "mean_height", "mean_height_identity",
    "run_ensemble", "sample_bernoulli", "sample_uniform", "wilson_interval",
    "OracleResult", "configurations", "ctmc_oracle", "ring_generator", "signed_profile",
]
