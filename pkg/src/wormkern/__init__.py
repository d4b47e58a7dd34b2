"""Bergman kernels of the non-smooth worm domains, by mode summation, residue splitting and closed-form expansion."""

__version__ = "0.1.0"
