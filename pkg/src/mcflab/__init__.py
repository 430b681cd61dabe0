"""Numerical laboratory for rotationally symmetric ancient mean curvature flows."""

__version__ = "0.1.0"
