"""Exact Gaussian-process regression for seasonal incidence forecasting."""
__version__ = "0.1.0"
