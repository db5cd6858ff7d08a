"""Exception hierarchy shared across the package.

The CLI maps these onto its exit-code contract, so new failure modes
should subclass one of the types below rather than raising bare
exceptions.
"""


class MixlabError(Exception):
    """Base class for all package errors."""


class SchemaError(MixlabError):
    """Input file is unreadable, malformed, or violates a JSON schema."""


class InvariantError(MixlabError, ValueError):
    """A domain invariant is violated (dimensions, signs, finiteness, ...)."""


class MassMismatchError(MixlabError, ValueError):
    """Equal-mass precondition of a transport metric is violated."""


class ConvergenceError(MixlabError, RuntimeError):
    """An iterative solver ran out of budget; carries the last residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class NonexpansiveViolationError(MixlabError, RuntimeError):
    """The mixed-level distance exceeded the meta-level distance plus slack.

    This bound is expected to hold on probability ensembles; a violation
    indicates a solver bug, so it is raised as a hard failure naming the
    offending step.
    """

    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step
