"""Toric test configurations, geodesic rays and the Futaki / yen invariants."""

__version__ = "0.1.0"
