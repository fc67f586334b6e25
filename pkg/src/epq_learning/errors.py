"""Exception hierarchy shared by the library and the command line."""


class EPQError(Exception):
    """Base class for all library errors."""


class DomainError(EPQError, ValueError):
    """An argument lies outside the mathematical domain of a formula."""


class InfeasibleError(EPQError):
    """The cycle cannot close for the requested run time."""


class InvalidRunTimeError(InfeasibleError, DomainError):
    """Run time is not strictly positive."""


class NoFeasibleBracketError(InfeasibleError):
    """No point of the search bracket is feasible."""


class QuadratureError(EPQError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class DivergentIntegralError(QuadratureError):
    """The integral is improper and does not converge."""

    def __init__(self, message, label=None):
        super().__init__(message)
        self.label = label


class ScenarioError(EPQError):
    """A scenario or sweep document is malformed."""
