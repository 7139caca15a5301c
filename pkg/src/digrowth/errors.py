"""Exception hierarchy shared by all modules."""


class DigrowthError(Exception):
    """Base class for errors raised by this package."""


class InvalidArgumentError(DigrowthError, ValueError):
    """Malformed input: wrong shape, non-finite entries, bad sign."""


class ValidationError(InvalidArgumentError):
    """A network or configuration failed validation.

    ``problems`` lists every offending field, not just the first one.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class DomainError(InvalidArgumentError):
    """A bound or formula was evaluated outside the region where it holds."""


class NumericFailure(DigrowthError, ArithmeticError):
    """An iterative method did not converge.

    ``estimate`` carries the last iterate so callers can still report it.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class NoCircuitFound(DigrowthError, LookupError):
    """The network has no circuit of the requested kind."""


class CircuitMismatch(InvalidArgumentError):
    """A circuit does not respect the links or seasons of a network."""
