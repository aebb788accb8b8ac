"""Fiducial distributions, invariant losses and optimal equivariant rules."""

__version__ = "0.1.0"
