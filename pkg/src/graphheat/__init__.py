"""Spectral simulation lab for stochastic heat equations on metric graphs."""

__version__ = "0.1.0"

from .graph import MetricGraph, load_graph, validate_graph  # noqa: F401
