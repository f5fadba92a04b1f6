"""Height fluctuations of stationary TASEP on a ring: exact finite-size
formulas, limiting crossover distributions and simulation cross-checks."""

__version__ = "0.1.0"
