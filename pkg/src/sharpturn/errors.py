"""Exception hierarchy.

Errors fall into three families so the command-line layer can map them to
exit codes: configuration problems, domain (precondition) violations and
solver failures.
"""


class SharpTurnError(Exception):
    """Base class for all library errors."""

    def to_dict(self):
        return {"error": type(self).__name__, "message": str(self)}


class ConfigError(SharpTurnError, ValueError):
    """Malformed or inconsistent configuration."""


class DomainError(SharpTurnError, ValueError):
    """An argument lies outside the domain of an operation."""


class SolverError(SharpTurnError, RuntimeError):
    """A numerical procedure failed to produce a valid answer."""


# domain errors

class InvalidParams(DomainError):
    pass


class InvalidFrame(DomainError):
    pass


class SharpModel(DomainError):
    """A smooth-profile operation was requested with b = 0."""


class NonSharp(DomainError):
    """A sharp-model operation was requested with b > 0."""


class OutOfDomain(DomainError):
    pass


class SmallQ(DomainError):
    """The Mathieu parameter is too small for the WKB estimate."""


# solver errors

class NonConvergence(SolverError):
    pass


class SingularJacobian(SolverError):
    pass


class NoSignChange(SolverError):
    pass


class StepUnderflow(SolverError):
    pass


class EventStorm(SolverError):
    pass


class BranchLost(SolverError):
    """Continuation could not be carried past ``parameter``.

    ``partial`` holds the ``(parameter, solution)`` pairs obtained before
    the failure.
    """

    def __init__(self, parameter, partial=None, cause=None):
        self.parameter = parameter
        self.partial = list(partial or [])
        self.cause = cause
        msg = f"branch lost at parameter {parameter!r}"
        if cause is not None:
            msg += f" ({type(cause).__name__}: {cause})"
        super().__init__(msg)

    def to_dict(self):
        d = super().to_dict()
        d["parameter"] = float(self.parameter)
        return d


class NoReflectionFound(SolverError):
    pass


class BranchViolation(SolverError):
    pass


class InvalidSample(SolverError):
    pass


class UnitarityViolation(SolverError):
    pass


class CoverageGap(SolverError):
    pass


class ResidualTooLarge(SolverError):
    pass


class NoEscape(SolverError):
    pass


class NoGrowth(SolverError):
    pass
