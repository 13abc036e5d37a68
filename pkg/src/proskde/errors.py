"""Exception hierarchy for proskde.

Exit-code mapping used by the CLI: usage errors are raised by argparse
itself (exit 2); DataError subclasses map to exit 3, NumericalError
subclasses to exit 4.
"""


class ProskdeError(Exception):
    """Base class for all package errors."""


class DataError(ProskdeError):
    """Malformed or structurally invalid input data."""


class NumericalError(ProskdeError):
    """A numerical routine failed or was asked for an undefined value."""


class RankDomainError(NumericalError):
    """Order-statistic rank outside 1..s."""


class DomainError(NumericalError):
    """Argument outside the mathematical domain of an operation."""


class DesignMismatchError(DataError):
    """Design, matrix, or sample dimensions are inconsistent."""


class IngestionError(DataError):
    """A CSV/population file could not be parsed."""


class StructureError(DataError):
    """A sample violates the balanced cycle/subset structure."""


class DegenerateSampleError(NumericalError):
    """A sample has zero spread where positive spread is required."""


class BandwidthError(NumericalError):
    """Non-positive or otherwise unusable bandwidth."""


class CoverageError(NumericalError):
    """An evaluation grid does not cover the required range."""


class IntegrationError(NumericalError):
    """Adaptive quadrature failed to converge."""


class NumericalDegeneracyError(NumericalError):
    """A weight or likelihood denominator collapsed to zero."""


class SolverError(NumericalError):
    """An inner optimizer exhausted its iteration budget."""

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class ReplicateFailureError(NumericalError):
    """Too many Monte Carlo replicates aborted."""
