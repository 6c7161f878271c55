"""Biblio Connectivity - coupling networks and their connectivity under weight thresholding."""

__version__ = "0.1.0"
