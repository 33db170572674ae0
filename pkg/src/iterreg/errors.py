"""Exception hierarchy shared by all modules."""


class IterRegError(Exception):
    """Base class for every error raised by :mod:`iterreg`."""


class DimensionError(IterRegError, ValueError):
    """Array shapes do not agree."""


class DomainError(IterRegError, ValueError):
    """An argument lies outside the domain of a function."""


class DegenerateError(IterRegError, ValueError):
    """The operator has rank zero."""


class PreconditionError(IterRegError, ValueError):
    """A structural precondition (e.g. orthonormality) does not hold."""


class ConfigError(IterRegError, ValueError):
    """Invalid configuration; maps to CLI exit code 2."""


class NumericError(IterRegError, ArithmeticError):
    """A non-finite value showed up in a computation; CLI exit code 3."""
