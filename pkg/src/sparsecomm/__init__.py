"""Sparse-signal error-control coding: dictionaries, codecs, decoders, simulation."""

__version__ = "0.1.0"
