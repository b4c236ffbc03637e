"""Zeroth-order policy search with a parameter-space critic."""

__version__ = "0.1.0"
