"""Desk-scale calculus for graph-weight L-infinity structures on polyvector
fields and their formality morphism to the Hochschild complex."""

__version__ = "0.1.0"
