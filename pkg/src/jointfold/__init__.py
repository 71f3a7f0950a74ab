"""Partition functions and pairing probabilities for joint structures of two RNA strands."""

__version__ = "0.1.0"
