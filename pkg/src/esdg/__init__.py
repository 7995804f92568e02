"""Entropy-stable p-nonconforming spectral-element discretization toolkit."""

__version__ = "0.1.0"
