"""Semantic exception hierarchy.

Every error raised on purpose by this package derives from FppLabError, so
callers (and the CLI) can distinguish usage problems from genuine bugs.
"""


class FppLabError(Exception):
    """Base class for all errors raised by fpplab."""


class DomainError(FppLabError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class SingularityError(FppLabError, ArithmeticError):
    """A quantity hit a guarded singularity (e.g. a density below the floor)."""


class UnsupportedKindError(FppLabError, TypeError):
    """The distribution kind cannot support the requested operation."""


class UnsupportedParameterError(FppLabError, ValueError):
    """Parameters are syntactically valid but outside the supported range."""


class ResourceGuardError(FppLabError, ValueError):
    """An exhaustive computation was refused because it would be too large."""


class ConfigError(FppLabError, ValueError):
    """An experiment or CLI configuration is inconsistent or incomplete."""


class NumericError(FppLabError, ArithmeticError):
    """A numerical routine (quadrature, root finding) failed to converge."""
