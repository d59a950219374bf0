"""Exact computations for Berezin-Toeplitz quantization on the quantum disc."""

__version__ = "0.1.0"
