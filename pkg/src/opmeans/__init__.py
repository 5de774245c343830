"""Spherical and related means as hypergeometric functions of the Laplacian."""

__version__ = "0.1.0"
