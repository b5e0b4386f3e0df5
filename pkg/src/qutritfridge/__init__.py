"""Steady-state thermodynamics of collectively coupled qutrit absorption refrigerators."""

__version__ = "0.1.0"
