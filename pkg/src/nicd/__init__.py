"""Noise identification with a diverse set of classifiers."""
__version__ = "0.1.0"
