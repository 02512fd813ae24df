"""Bubble-family laboratory for the Einstein-Lichnerowicz equation on round spheres."""

__version__ = "0.1.0"
