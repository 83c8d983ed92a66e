"""Quotient metrics, bilipschitz orbit-space embeddings and a distortion lab."""

__version__ = "0.1.0"
