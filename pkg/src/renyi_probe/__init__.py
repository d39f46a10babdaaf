"""Renyi entropies from randomized measurements with quench-generated random unitaries."""

__version__ = "0.1.0"
