"""Simulation toolkit for directed last-passage percolation with Exp(1) weights."""

__version__ = "0.1.0"
