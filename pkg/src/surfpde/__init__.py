"""Meshfree discovery and forward validation of PDEs on closed surfaces."""

__version__ = "0.1.0"
