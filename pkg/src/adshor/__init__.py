"""Fault-tolerant Bacon-Shor gadgets for amplitude-damping noise."""

__version__ = "0.1.0"
