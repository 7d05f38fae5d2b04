"""Numerical laboratory for the isotropic Heisenberg magnet and its
space-time dual: Lax matrices, r/K-matrix identities, transport and
transfer machinery, conserved-charge towers, and evolution engines with
conservation monitoring."""

__version__ = "0.1.0"
