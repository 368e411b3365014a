"""Numerical certification and refutation of metrics on the real line."""

__version__ = "0.1.0"
