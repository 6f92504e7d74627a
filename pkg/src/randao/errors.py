"""Exception hierarchy shared by the solver, simulator and CLI."""


class RandaoError(Exception):
    """Base class for all package errors."""


class DomainError(RandaoError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class NumericalFailure(RandaoError, ArithmeticError):
    """Floating point evaluation produced an invalid probability."""


class SolverError(RandaoError):
    """A linear system could not be solved (singular or non-ergodic input)."""


class NonConvergenceError(RandaoError):
    """Policy iteration did not settle within the iteration budget."""


class InstabilityError(RandaoError):
    """The look-ahead bounds are undefined because q >= 1."""


class CapExceeded(RandaoError):
    """A simulation would need a batch of 2**t candidates beyond the tail cap."""
