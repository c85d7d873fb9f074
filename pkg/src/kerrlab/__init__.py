"""Kerr-medium revivals, squeezing, Wigner negativity, two-mode entanglement
and time-series diagnostics."""

__version__ = "0.1.0"
