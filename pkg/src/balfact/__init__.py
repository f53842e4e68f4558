"""Balanced factorisations in finite fields, the rationals and matrix rings."""

__version__ = "0.1.0"
