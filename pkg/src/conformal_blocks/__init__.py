"""Conformal block evaluation of two-dimensional complex-plane integrals."""

__version__ = "0.1.0"
