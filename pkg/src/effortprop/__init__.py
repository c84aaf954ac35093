"""Parallel and hierarchical effort propagation over multi-attribute decision systems."""

__version__ = "0.1.0"
