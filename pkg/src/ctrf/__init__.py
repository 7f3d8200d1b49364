"""Hyperspectral super-resolution by coupled tensor-ring factorization."""

__version__ = "0.1.0"
