"""Desk-scale co-simulation of a peer-to-peer electricity market on a radial LV feeder."""

__version__ = "0.1.0"
