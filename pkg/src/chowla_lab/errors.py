"""Exception hierarchy shared by every module."""


class ChowlaLabError(Exception):
    """Base class for all workbench errors."""


class CapacityError(ChowlaLabError, MemoryError):
    """A table, enumeration or inclusion-exclusion exceeds its configured capacity."""


class WideIntegerOverflow(ChowlaLabError, OverflowError):
    """An intermediate value left the configured signed wide-integer width."""


class OutOfRangeError(ChowlaLabError, ValueError):
    """An argument lies outside the sieve table or the operation's domain."""


class InvalidDiscriminantError(ChowlaLabError, ValueError):
    """The integer is not a fundamental discriminant."""


class FactorizationError(ChowlaLabError, ValueError):
    """A modulus does not have the 2^j * m structure of a real primitive conductor."""


class PreconditionError(ChowlaLabError, ValueError):
    """An operation was called outside the hypotheses it is valid for."""


class AxiomViolationError(ChowlaLabError, ValueError):
    """A sieve problem fails one of the sieve axioms."""


class DegenerateSieveError(AxiomViolationError):
    """Some prime removes every residue class (nu(p) == p)."""


class InconsistencyError(ChowlaLabError, RuntimeError):
    """Two independent computations of the same quantity disagree."""


class ConfigError(ChowlaLabError, ValueError):
    """Experiment parameters are inconsistent."""


class UsageError(ChowlaLabError, ValueError):
    """Command-line arguments failed validation."""
