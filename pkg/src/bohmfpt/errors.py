"""Exception hierarchy shared by all modules."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class UnboundedNuError(DomainError):
    """The reciprocal passage time is unbounded (particle starts on the detector)."""


class ConfigurationError(ValueError):
    """Invalid numerical configuration, e.g. a grid too small for the packet."""


class DegenerateFieldError(ValueError):
    """Every grid point was masked out while extracting a velocity field."""


class FieldEvaluationError(ArithmeticError):
    """A velocity field returned a non-finite value."""


class OutOfDomainError(ArithmeticError):
    """A trajectory left the region where the velocity field is defined."""


class IntegrationError(ArithmeticError):
    """Trajectory integration failed; ``record`` holds the partial path."""

    def __init__(self, message, record=None, sample_index=None):
        super().__init__(message)
        self.record = record
        self.sample_index = sample_index
