"""Exception and warning types raised by :mod:`bisr`."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class ConvexityError(DomainError):
    """Penalty parameters are not covered by a convexity certificate."""


class SolverFailure(RuntimeError):
    """An iterative solver failed to make monotone progress.

    The objective trace up to the failure is kept in ``trace``.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class DebiasWarning(UserWarning):
    """Least-squares debiasing was skipped."""


class CertificateWarning(UserWarning):
    """An optimality report was requested for an uncertified objective."""
