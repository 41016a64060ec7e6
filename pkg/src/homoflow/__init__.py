"""Workbench for consistent random expansions of homogeneous digraph ages."""
__version__ = "0.1.0"
