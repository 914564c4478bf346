"""Painleve I tau-functions from the topological recursion on a genus-one curve."""

__version__ = "0.1.0"
