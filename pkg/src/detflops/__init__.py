"""Flops between the determinantal Calabi-Yau models cut out by one
multilinear tensor, their action on divisor classes, and the chamber
structure of the movable cone."""

__version__ = "0.1.0"
