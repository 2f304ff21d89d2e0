"""Landmark-based IP geolocation: clue mining, landmark scoring and a network simulator."""

__version__ = "0.1.0"
