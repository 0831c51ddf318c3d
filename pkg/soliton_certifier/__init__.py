"""Numerical construction and certification of quasilinear Schrodinger solitons."""

__version__ = "1.0.0"
