"""Glued metrics, poset topologies, banded operators and continuous matrix fields at finite scale."""

__version__ = "0.1.0"
