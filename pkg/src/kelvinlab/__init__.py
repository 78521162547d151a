"""Contour-dynamics laboratory for m-fold Kelvin waves of the 2D Euler equations."""

__version__ = "0.1.0"
