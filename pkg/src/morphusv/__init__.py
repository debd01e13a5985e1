"""Transformable surface-vehicle workbench."""

__version__ = "0.1.0"
