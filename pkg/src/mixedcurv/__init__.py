"""Numerical laboratory for the metric-affine geometry of a distribution."""

__version__ = "0.1.0"
