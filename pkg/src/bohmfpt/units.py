"""Conversion between SI quantities and the dimensionless model variables.

Lengths are measured in units of the packet width ``a`` and times in units of
``m a**2 / hbar``; in these units the free Schrodinger equation reads
``i dpsi/dt = -laplacian(psi) / 2`` and the model depends on ``d`` alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from bohmfpt.errors import DomainError

# CODATA 2018, truncated to 10 significant digits.
HBAR = 1.054571817e-34  # J s
SPEED_OF_LIGHT = 299792458.0  # m / s, exact
ELECTRON_MASS = 9.109383702e-31  # kg


def _require_positive(name: str, value: float) -> None:
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise DomainError(f"{name} must be a positive finite number, got {value!r}")


def _require_nonnegative(name: str, value: float) -> None:
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value >= 0):
        raise DomainError(f"{name} must be a non-negative finite number, got {value!r}")


@dataclass(frozen=True)
class PhysicalConfig:
    mass: float
    packet_width_a: float
    detector_radius_d: float
    hbar: float = HBAR

    def __post_init__(self):
        _require_positive("mass", self.mass)
        _require_positive("packet_width_a", self.packet_width_a)
        _require_positive("detector_radius_d", self.detector_radius_d)
        _require_positive("hbar", self.hbar)

    @property
    def time_unit(self) -> float:
        """Seconds per dimensionless time unit, ``m a**2 / hbar``."""
        a = self.packet_width_a
        return self.mass * a * a / self.hbar


@dataclass(frozen=True)
class DimensionlessConfig:
    """Detector radius in units of the packet width."""

    d: float

    def __post_init__(self):
        _require_positive("d", self.d)


def to_dimensionless(p: PhysicalConfig, t_phys: float = 0.0, r_phys: float = 0.0):
    """Map a physical setup, time and radius to ``(DimensionlessConfig, t, r)``."""
    _require_nonnegative("t_phys", t_phys)
    _require_nonnegative("r_phys", r_phys)
    a = p.packet_width_a
    cfg = DimensionlessConfig(d=p.detector_radius_d / a)
    t = p.hbar * t_phys / (p.mass * a * a)
    return cfg, t, r_phys / a


def to_physical(c: DimensionlessConfig, p: PhysicalConfig, t: float) -> float:
    """Inverse of the time map in :func:`to_dimensionless`; returns seconds.

    ``c`` is accepted for symmetry with :func:`to_dimensionless`; only the
    physical scales in ``p`` enter the conversion.
    """
    if not isinstance(c, DimensionlessConfig):
        raise DomainError("c must be a DimensionlessConfig")
    _require_nonnegative("t", t)
    a = p.packet_width_a
    return p.mass * a * a * t / p.hbar


def length_to_physical(p: PhysicalConfig, r: float) -> float:
    _require_nonnegative("r", r)
    return r * p.packet_width_a


def asymptotic_velocity_physical(p: PhysicalConfig, R0: float) -> float:
    """Late-time radial speed ``hbar * R0_phys / (m a**2)`` for a dimensionless start radius ``R0``."""
    _require_nonnegative("R0", R0)
    a = p.packet_width_a
    return p.hbar * (R0 * a) / (p.mass * a * a)


def reduced_compton_wavelength(p: PhysicalConfig, c: float = SPEED_OF_LIGHT) -> float:
    _require_positive("c", c)
    return p.hbar / (p.mass * c)


def superluminal_threshold(p: PhysicalConfig, c: float = SPEED_OF_LIGHT) -> float:
    """Dimensionless start radius beyond which the asymptotic speed exceeds ``c``.

    Equals ``a / lambda_c``; the corresponding physical radius is ``a**2 / lambda_c``.
    """
    return p.packet_width_a / reduced_compton_wavelength(p, c)
