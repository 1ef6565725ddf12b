"""Orbit growth and spectral bounds for discrete subgroups of SL2(R) and SL2(R) x SL2(R)."""

__version__ = "0.1.0"
