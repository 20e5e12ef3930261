"""Probabilistic amplitude shaping lab with nonlinear phase noise metrics."""
__version__ = "0.1.0"
