"""Samplers and codecs for half-planar triangulations under site percolation."""

__version__ = "0.1.0"
