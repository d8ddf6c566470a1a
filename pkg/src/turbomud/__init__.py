"""Iterative joint equalization and multiuser detection for coded DS-CDMA."""
__version__ = "0.1.0"
