"""Exception types shared across the library."""


class SolverError(Exception):
    """Base class for all library errors."""


class ValidationError(SolverError):
    """Invalid construction parameters or violated preconditions."""


class DimensionError(SolverError):
    """Mismatched vector/operator dimensions."""


class CapabilityError(SolverError):
    """Operation requested from an operator that does not support it."""


class SingularSolveError(SolverError):
    """A resolvent linear system was numerically singular.

    Cannot happen for a monotone operator; signals a construction bug.
    """


class BasePointMismatch(SolverError):
    """Certificates combined at different base points."""


class OracleError(SolverError):
    """A reference or certificate oracle failed to produce an answer."""


class CertificateRejected(SolverError):
    """A step certificate failed the relative-error acceptance inequality.

    Carries the offending iteration index, the failed report, and the
    records accepted before the rejection so callers can still inspect
    or persist the partial run.
    """

    def __init__(self, message, k=None, report=None, records=None):
        super().__init__(message)
        self.k = k
        self.report = report
        self.records = list(records) if records is not None else []
