"""Induce, store and reuse web-navigation workflows."""

__version__ = "0.1.0"
