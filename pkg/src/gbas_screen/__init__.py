"""GBAS position-domain geometry screening."""

__version__ = "0.1.0"
