"""Symbolic-numeric exterior calculus for almost-complex structures on a chart."""

__version__ = "0.1.0"
