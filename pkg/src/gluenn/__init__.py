"""Learned coefficient functions that glue patchwise asymptotic solutions into one global solution."""

__version__ = "0.1.0"
