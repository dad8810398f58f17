"""Closed-loop PI/PID simulation of coupled-tank level and flow loops."""

__version__ = "0.1.0"
