"""Resonance poles of a Neumann trap coupled to a half-plane by a narrow channel."""
__version__ = "0.1.0"
