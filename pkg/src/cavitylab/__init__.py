"""Curl-conforming FE laboratory for the time-harmonic Maxwell cavity problem."""

__version__ = "0.1.0"
