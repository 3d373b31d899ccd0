"""Cartan-connection curvature engine and recurrence laboratory for Finsler metrics."""

__version__ = "0.1.0"
