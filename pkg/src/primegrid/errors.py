"""Exception types shared across the package.

The CLI maps these onto exit codes (3 for data/format problems, 4 for
numeric or resource failures).
"""


class PrimeGridError(Exception):
    """Base class for all package errors."""


class DomainError(PrimeGridError, ValueError):
    """An argument lies outside the domain of an operation."""


class DataError(PrimeGridError):
    """Malformed or inconsistent input files, checkpoints or series."""


class InvariantViolation(PrimeGridError, AssertionError):
    """A mathematical invariant failed; indicates an engine bug."""


class NumericError(PrimeGridError, ArithmeticError):
    """A root was not bracketed, a solve failed, or similar."""


class ResourceError(PrimeGridError):
    """A time or size budget was exceeded."""


class GenerationError(PrimeGridError):
    """The sequence generator reached a state it cannot sample from."""
