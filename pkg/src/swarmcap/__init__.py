"""Swarm learning simulator for battery capacity estimation."""

__version__ = "0.1.0"
