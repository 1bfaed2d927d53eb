"""Equilibrium measures and multiple orthogonal polynomial asymptotics for
the random matrix model with an equispaced external source."""

__version__ = "0.1.0"
