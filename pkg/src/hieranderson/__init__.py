"""Monte Carlo laboratory for spectral statistics of hierarchical and lattice Anderson models."""

__version__ = "0.1.0"
