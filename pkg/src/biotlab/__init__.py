"""Four-field Biot poroelasticity: Lagrange elements, backward Euler, verification tools."""

__version__ = "0.1.0"
