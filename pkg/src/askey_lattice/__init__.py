"""Exactly solvable inhomogeneous lattice fermions, XX chains and birth-death
processes built from the discrete Askey-scheme polynomials."""
