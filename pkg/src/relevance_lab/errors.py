"""Exception hierarchy shared by all modules.

Validation problems (bad shapes, out-of-range parameters) derive from
``ValidationError``; failures that happen while computing (singular
states, divergent integrals, solver non-convergence) derive from
``NumericalError``.  The command line maps the two families onto
different exit codes.
"""


class RelevanceLabError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(RelevanceLabError, ValueError):
    """Input failed a structural or range check."""


class DimensionError(ValidationError):
    """Operand dimensions are incompatible."""


class DomainError(ValidationError):
    """Argument lies outside the domain of the operation."""


class ConfigurationError(ValidationError):
    """A discretisation or run configuration is unusable."""


class NumericalError(RelevanceLabError, ArithmeticError):
    """A computation could not be carried out reliably."""


class RankError(NumericalError):
    """A state (or metric) is not of full rank."""


class DivergenceError(NumericalError):
    """A weight ``exp(-H)`` cannot be normalised."""


class NoSolutionError(NumericalError):
    """An iterative solver failed to converge."""


class WindowError(NumericalError):
    """A log-log fit window lies outside the asymptotic regime."""


class CapacityError(NumericalError):
    """A dense representation would exceed the configured size cap."""
