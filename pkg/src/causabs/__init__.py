"""Finite structural causal models, exhaustive tau-abstraction checking and
search, and a continual abstraction-revision loop over binary data."""

__version__ = "0.1.0"
