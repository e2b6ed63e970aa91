"""Cauchy Lab - numerics for singular integrals on weighted variable Lebesgue spaces."""

__version__ = "0.1.1"
