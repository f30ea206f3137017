"""Resonant-pair conductivity, correlators and DOS for strongly localized electrons."""

__version__ = "0.1.0"
