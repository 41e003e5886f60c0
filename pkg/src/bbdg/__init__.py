"""Tetrahedral DG operators in interchangeable Bernstein-Bezier and nodal bases.

The package provides the reference-element operator algebra (sparse barycentric
derivatives, factorized and optimal-complexity face lifts, degree elevation),
a matching Lagrange/nodal operator set, box meshes with trace-matched
connectivity, an upwind DG solver for the first-order acoustic wave equation,
and an operator diagnostics suite (conditioning, entry extrema, eigenvalue
identities, operation counts).
"""

__version__ = "0.1.0"
