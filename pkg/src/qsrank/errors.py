"""Exception types shared across the package."""


class QsrankError(Exception):
    """Base class for all qsrank errors."""


class ValidationError(QsrankError):
    """Invalid input: malformed file, dimension mismatch, bad argument."""


class LossNotSuitableError(QsrankError):
    """A loss without the divide-and-conquer guarantees was passed to a
    fast engine without explicitly requesting oracle-checked mode."""


class SizeGuardError(QsrankError):
    """A brute-force oracle was asked to enumerate too large a space."""


class DivergenceError(QsrankError):
    """Training objective blew up; carries the training log so far."""

    def __init__(self, message, log=None):
        super().__init__(message)
        self.log = log


class GradientCheckError(QsrankError):
    """Finite-difference verification of the training gradient failed."""
