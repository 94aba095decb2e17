"""Levi polynomials, orbit conditions and singular convolution probes on CR hypersurfaces."""

__version__ = "0.1.0"
