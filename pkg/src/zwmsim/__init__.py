"""Sparse Fock-space simulation of path-identity interferometers and KCBS tests."""

__version__ = "0.1.0"
