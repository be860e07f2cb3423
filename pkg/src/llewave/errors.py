"""Exception types raised by the numerical pipelines.

All failures that carry numerical meaning (loss of existence conditions,
Newton breakdown, spectral misclassification, ...) get their own class so
callers and the CLI can map them to exit codes without string matching.
"""


class LLEWaveError(Exception):
    """Base class for all package-specific errors."""


class ExistenceViolation(LLEWaveError):
    """Parameters violate the solvability condition pi^2 f^2 > 8 zeta."""


class DegenerateRoot(LLEWaveError):
    """The rotation angle is not a simple root (|sin theta| below tolerance)."""


class RootJump(LLEWaveError):
    """Background Newton iteration landed on an excluded cubic branch."""


class NoConvergence(LLEWaveError):
    """Newton iteration failed to reach the residual tolerance."""


class SingularJacobian(LLEWaveError):
    """Newton linear solve is too ill-conditioned to trust."""


class ContinuationFailure(LLEWaveError):
    """Branch continuation aborted; carries the partial branch and failing eps."""

    def __init__(self, message, partial_branch=None, failed_epsilon=None):
        super().__init__(message)
        self.partial_branch = partial_branch
        self.failed_epsilon = failed_epsilon


class ComplexResidue(LLEWaveError):
    """Similarity-transformed operator has a non-negligible imaginary part."""


class KernelDimensionMismatch(LLEWaveError):
    """Number of near-zero eigenvalues differs from the expected kernel dimension."""


class SupercriticalBackground(LLEWaveError):
    """Background amplitude too large for the dispersion-edge formula."""


class EigensolveFailure(LLEWaveError):
    """Dense eigenvalue solver did not converge."""


class CountingFormulaViolation(LLEWaveError):
    """Krein index sum does not balance the negative-eigenvalue count."""

    def __init__(self, message, offending=None):
        super().__init__(message)
        self.offending = offending or []


class IllConditionedKernelSolve(LLEWaveError):
    """Constrained kernel-orthogonal linear solve is numerically unreliable."""


class NearSingular(LLEWaveError):
    """Resolvent requested too close to the spectrum."""


class FrequencyTooLow(LLEWaveError):
    """Schur contraction bound >= 1/2; imaginary part below admissible rho."""


class BlowUp(LLEWaveError):
    """Time integration exceeded the amplitude safety bound."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class ConfigError(LLEWaveError):
    """Invalid run configuration."""
