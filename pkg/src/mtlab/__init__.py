"""Numerical toolkit for sharp Moser-Trudinger thresholds on radial and discrete spaces."""

__version__ = "0.1.0"
