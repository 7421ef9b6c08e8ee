"""Exception hierarchy shared by every module.

Each class carries the CLI exit status it maps to, so scripts get stable codes.
"""


class OscillaError(Exception):
    exit_code = 1


class PreconditionError(OscillaError, ValueError):
    """An argument violates an operation's precondition."""


class ValidationError(OscillaError, ValueError):
    """Data that parsed fine but breaks a domain invariant."""


class ParseError(OscillaError, ValueError):
    exit_code = 2

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class RangeError(OscillaError, ValueError):
    """Query outside the sieved range of a psi table."""


class CapacityError(OscillaError):
    """Request exceeds a configured memory/size budget."""


class IncompletenessError(OscillaError):
    """Query beyond the height to which a zero set is asserted complete."""

    exit_code = 3


class HypothesisError(PreconditionError):
    """A theorem hypothesis fails while running in theorem mode."""


class DomainError(PreconditionError):
    pass


class GuardError(PreconditionError):
    """A numerical guard (truncation, step size) is not met."""


class ConvergenceError(OscillaError):
    pass
