"""Exception hierarchy shared by every module of the package."""


class EqMatchError(Exception):
    """Base class for all package errors."""


class ArgumentError(EqMatchError, ValueError):
    """An argument violates an operation's precondition."""


class RangeError(ArgumentError):
    """A numeric argument is outside the representable or admissible range."""


class UnsupportedGeometryError(EqMatchError):
    """The operation is not defined for the configuration's geometry."""


class UndecidableError(EqMatchError):
    """The generated region is too small to decide the requested quantity.

    Callers should enlarge the margin (or supply a configuration that carries a
    regenerable coin field) and retry.
    """


class DegenerateSampleError(EqMatchError):
    """A statistic was requested from an empty or degenerate sample."""


class ConsistencyError(EqMatchError):
    """Internal bookkeeping disagrees with itself; indicates a bug."""


class ContractViolation(EqMatchError):
    """A user-supplied callable broke its contract (e.g. negative mass)."""


class DegenerateFitError(DegenerateSampleError):
    """Too few usable points for a regression."""
