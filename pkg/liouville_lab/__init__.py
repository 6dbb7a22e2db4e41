"""Spectral laboratory for co-polyharmonic fields, LQG measures and Polyakov–Liouville partition functions."""

__version__ = "0.1.0"
