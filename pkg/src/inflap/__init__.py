"""Numerical laboratory for nonexistence of solutions to Delta_inf u >= f(x, u)."""

__version__ = "0.1.0"
