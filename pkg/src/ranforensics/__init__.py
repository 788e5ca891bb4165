"""Measurement forensics for software RAN scaling studies."""

__version__ = "0.1.0"
