"""Exception taxonomy shared across the package.

Every failure mode a caller may want to branch on gets its own class; the
CLI maps them onto stable exit codes (see ``eivgof.cli``).
"""


class EivGofError(Exception):
    """Base class for all estimation and testing failures.

    The optional ``stage`` attribute records which pipeline step raised
    (e.g. ``"tls_estimate"`` or ``"sigma_t"``) when the error surfaces
    from ``run_test``.
    """

    def __init__(self, message: str, stage: str | None = None):
        super().__init__(message)
        self.stage = stage

    def __str__(self) -> str:
        base = super().__str__()
        if self.stage:
            return f"[stage: {self.stage}] {base}"
        return base


class NotPositiveDefinite(EivGofError):
    """A matrix required to be positive definite failed the eigenvalue check."""


class NoFiniteSolution(EivGofError):
    """The orthogonal-regression problem has no finite minimizer for this sample."""


class DegenerateInput(EivGofError):
    """The minimizer is numerically non-unique (repeated decisive singular value)."""


class CovarianceNotPD(EivGofError):
    """The test covariance matrix is not positive definite at this sample size."""
