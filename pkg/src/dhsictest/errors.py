"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: input/configuration problems exit 2,
degenerate-variance failures exit 3.
"""


class DhsicError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(DhsicError, ValueError):
    """Malformed data: shape mismatches, non-finite values, bad CSV cells."""


class ConfigurationError(DhsicError, ValueError):
    """Inconsistent configuration: wrong spec count, missing grid, bad identifiers."""


class OracleSizeError(DhsicError, ValueError):
    """Brute-force oracle invoked beyond its explicit size bound."""


class DegenerateSchemeError(ConfigurationError):
    """Weight scheme with unit quadratic-mean limit fed to the variance estimator."""


class DegenerateVarianceError(DhsicError, ArithmeticError):
    """Estimated null variance is zero, so no z-score or p-value exists."""


class StudyReplicateError(DhsicError, RuntimeError):
    """A Monte Carlo replicate failed; carries the replicate index."""

    def __init__(self, replicate: int, message: str):
        super().__init__(f"replicate {replicate}: {message}")
        self.replicate = replicate
