"""nhrelax: relaxation dynamics of dissipative non-reciprocal lattices.

A numerical laboratory for quadratic-Lindbladian tight-binding chains with a
non-Hermitian skin effect: effective-Hamiltonian and jump-operator model
builders, four independent propagator routes, covariance dynamics with exact
Fock-space oracles, and the scaling analysis that separates the propagation
length controlling relaxation from the skin localization length.
"""

__version__ = "0.1.0"

from . import analysis, dynamics, models, ndlinalg, oracle, propagator  # noqa: F401,E402
