"""Iterative spectral regularization for statistical linear inverse problems."""

__version__ = "0.1.0"
