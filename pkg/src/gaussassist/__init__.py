"""Gaussian squeezing and entanglement of assistance."""

__version__ = "0.1.0"
