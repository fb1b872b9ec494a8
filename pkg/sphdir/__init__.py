"""Spherical-Dirichlet distribution on the positive orthant of the unit hypersphere."""

__version__ = "0.1.0"
