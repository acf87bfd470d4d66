"""Committee elections: honest-committee probabilities under approval voting."""

__version__ = "0.1.0"
