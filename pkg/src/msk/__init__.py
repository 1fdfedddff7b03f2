"""Moment-problem tools for spectral symbols of matrix sequences."""

__version__ = "0.1.0"
