"""Spectrum and eigenfunctions of the three-term difference operator
u + v + q v^{-1} u^{-1} at complex Planck constant, built from q-series."""

from .qseries import ModularParams, Truncation

__all__ = ["ModularParams", "Truncation"]
__version__ = "0.1.0"
