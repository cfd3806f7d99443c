"""Sample points on expanding horocycles of the modular surface."""

__version__ = "0.1.0"
