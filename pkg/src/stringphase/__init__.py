"""Numerical verification of worldsheet geometry and covariant phase-space structures."""

__version__ = "0.1.0"
