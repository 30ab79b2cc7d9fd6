"""First-passage times of Bohmian particles guided by a freely spreading 3D Gaussian packet.

Everything below the CLI works in dimensionless units: lengths in units of the
initial packet width ``a`` and times in units of ``m a**2 / hbar``. The only
model parameter is then the detector radius ``d``.
"""

from bohmfpt.errors import (
    ConfigurationError,
    DegenerateFieldError,
    DomainError,
    FieldEvaluationError,
    IntegrationError,
    OutOfDomainError,
    UnboundedNuError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "DegenerateFieldError",
    "DomainError",
    "FieldEvaluationError",
    "IntegrationError",
    "OutOfDomainError",
    "UnboundedNuError",
    "__version__",
]
