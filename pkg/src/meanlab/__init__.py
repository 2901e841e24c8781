"""Finite-horizon laboratory for mean equicontinuity and mean sensitivity of
symbolic and interval systems."""

__version__ = "0.1.0"
