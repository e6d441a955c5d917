"""Discrete projective minimal surfaces: asymptotic nets, lattice Lie quadrics,
envelopes, the Cauchy problem and surface classification."""

__version__ = "0.1.0"
