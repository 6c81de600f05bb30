"""Weighted f-heat equations on radial model spaces, with estimate certificates."""

__version__ = "0.1.0"
