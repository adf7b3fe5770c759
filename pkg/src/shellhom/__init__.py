"""Homogenized bending energies of thin periodic shells."""

__version__ = "0.1.0"
