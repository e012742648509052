"""Transfer matrices of linear-optical devices and the quantum walks built from them."""

from . import coins, decompose, devices, graphs, linalg, walk

__version__ = "0.1.0"

__all__ = ["coins", "decompose", "devices", "graphs", "linalg", "walk"]
