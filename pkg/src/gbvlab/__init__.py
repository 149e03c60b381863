"""Numerical toolkit for best trigonometric approximation of series with GBV-type coefficients."""

__version__ = "0.1.0"
