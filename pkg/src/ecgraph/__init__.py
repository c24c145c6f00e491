"""Parsing toolkit for directed, acyclic, one-endpoint-crossing graphs."""
__version__ = "0.1.0"
