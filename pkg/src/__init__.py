"""Polynomial renormalization of iterated elementary maps of C^2."""

__version__ = "0.1.0"
