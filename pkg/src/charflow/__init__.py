"""Characteristic-invariant solvers and verifiers for 1D isentropic gas dynamics."""

__version__ = "0.1.0"
