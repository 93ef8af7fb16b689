"""Compositional blame-carrying analysis and sanitizer synthesis for MiniC."""
__version__ = "0.1.0"
