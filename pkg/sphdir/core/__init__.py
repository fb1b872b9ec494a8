"""Numerical core: special functions, the distribution, sampling, optimization, estimation."""
