"""Feedback capacity and coding for the binary channel with no consecutive ones."""

from .channel import ChannelParams, binary_entropy, canonicalize, likelihood, transmit

__all__ = ["ChannelParams", "binary_entropy", "canonicalize", "likelihood", "transmit"]
__version__ = "0.1.0"
