"""Switchable action dependency graphs for delay-robust multi-AGV plan execution."""

__version__ = "0.1.0"
