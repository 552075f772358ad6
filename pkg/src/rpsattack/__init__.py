"""Coherent replay attack on the random-postselection DIQKD protocol."""

__version__ = "0.1.0"
