"""Uniqueness and non-uniqueness experiments for the Laplace and Helmholtz equations."""

__version__ = "0.1.0"
