"""Exception hierarchy for nhrelax.

Every numerical guard in the library raises a named subclass of
:class:`NhrelaxError` so callers (and the CLI) can map failures to the
operation contract that was violated.
"""


class NhrelaxError(Exception):
    """Base class for all nhrelax errors."""


# -- linear algebra substrate -------------------------------------------------

class NonConvergence(NhrelaxError):
    """Iterative eigensolver failed to converge."""


class DegenerateSpectrum(NhrelaxError):
    """Two eigenvalues closer than the simple-spectrum guard; biorthogonalization refused."""


class NotTridiagonal(NhrelaxError):
    """Matrix is not in the tridiagonal non-reciprocal form the similarity solver needs."""


class ScaleOverflow(NhrelaxError):
    """Exponential eigenvector prefactors exceed double range; use the scaled (log) form."""


class DegenerateLeadingCoefficient(NhrelaxError):
    """Polynomial leading coefficient is (numerically) zero."""


class StepOverflow(NhrelaxError):
    """ODE state norm blew past 1e300 (unstable model)."""


class NonMonotonicGrid(NhrelaxError):
    """Time grid is not strictly increasing from zero."""


class UnstableModel(NhrelaxError):
    """Effective Hamiltonian has an eigenvalue with non-negative imaginary part."""


class VerificationError(NhrelaxError):
    """A requested cross-check (Richardson halved-step or route equivalence) failed."""


# -- model construction -------------------------------------------------------

class InvalidStatisticsSign(NhrelaxError):
    """Internal consistency failure in the fermion/boson sign convention."""


class BosonUnstable(NhrelaxError):
    """Bosonic pump rate is at or above the total loss; no steady state exists."""


class PerfectNonreciprocity(NhrelaxError):
    """kappa = w: Jordan structure, no biorthogonal basis; use the closed forms."""


class UnsetForModel(NhrelaxError):
    """Requested a derived scale that is not defined analytically for this model."""


# -- propagator routes --------------------------------------------------------

class CancellationGuard(NhrelaxError):
    """Spectral sum would lose all double-precision accuracy to cancellation."""


class BounceNonConvergence(NhrelaxError):
    """Bounce expansion failed to converge within the term cap."""


class FlatPeak(NhrelaxError):
    """Numeric peak search failed to bracket a maximum."""


class Underflow(NhrelaxError):
    """Propagator magnitude below double range at all sampled times; use the log route."""


# -- covariance dynamics ------------------------------------------------------

class AllFilledBosons(NhrelaxError):
    """The all-filled initial state is only defined for fermions."""


class PauliViolation(NhrelaxError):
    """Fermionic covariance eigenvalue escaped [0, 1]; signals a convention bug."""


class ZeroSteadyState(NhrelaxError):
    """Steady-state occupation vanishes (no pump); delta-n is undefined."""


class NotRelaxedWithinHorizon(NhrelaxError):
    """No sustained threshold crossing within the simulated horizon."""


# -- analysis -----------------------------------------------------------------

class MissingXi(NhrelaxError):
    """No localization length available (analytic or extracted) for this model."""


class InsufficientPoints(NhrelaxError):
    """Too few data points in the requested fit window."""


class NoPlateau(NhrelaxError):
    """Relaxation time did not saturate within the chain-length budget."""


class WrongSignSlope(NhrelaxError):
    """Height profile has the wrong sign of exponential trend for the requested fit."""


class NotAnEigenvalue(NhrelaxError):
    """Supplied energy is not in the model's spectrum to the required residual."""


# -- exact oracle -------------------------------------------------------------

class TooLarge(NhrelaxError):
    """Fock-space oracle is limited to 4 sites."""


class UnsupportedModel(NhrelaxError):
    """Explicit jump operators are only known for the nearest-neighbour chain."""


class TraceDrift(NhrelaxError):
    """Density-matrix trace drifted from one beyond tolerance."""


class IdentityNotAnnihilated(NhrelaxError):
    """Adjoint Liouvillian does not annihilate the identity; convention bug."""
