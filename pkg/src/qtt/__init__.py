"""Exact constructions and identity checks for open XXZ-type spin chains.

The package builds R-matrices, boundary K-matrices, double-row transfer
matrices and conserved charges as exact Laurent-polynomial-valued objects in
the spectral parameter, and verifies the finite-dimensional identities they
satisfy (Yang-Baxter, reflection, fusion hierarchy, boundary symmetries) to
numerical exactness.
"""

__version__ = "0.1.0"
