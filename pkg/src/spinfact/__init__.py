"""Spin-adapted fermionic rotation algebras, exact factorization and adaptive VQE."""

__version__ = "0.1.0"
