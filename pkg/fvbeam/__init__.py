"""Finite-volume solver for geometrically exact (Simo-Reissner) beams."""

__version__ = "0.1.0"
