"""Closed-form free Gaussian packet, its Bohmian flow and the passage-time laws.

All quantities are dimensionless (see :mod:`bohmfpt.units`). The initial state
is ``psi0(r) = pi**-0.75 * exp(-r**2 / 2)``; under free evolution every Bohmian
particle moves radially outward with ``R(t) = R0 * sqrt(1 + t**2)``.

The reciprocal passage time ``nu = 1 / tau`` has a point mass ``alpha(d)`` at
zero (particles that start outside the detector) and a continuous density
``lambda_continuous`` on ``(0, inf)`` carrying the remaining ``1 - alpha(d)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from bohmfpt.errors import DomainError, UnboundedNuError
from bohmfpt.special import erf, erfc, hyp1f1_scaled

SQRT_PI = math.sqrt(math.pi)


def _scalar_or_array(x_in, out):
    return float(out) if np.ndim(x_in) == 0 else out


# --------------------------------------------------------------------------
# Wave function and velocity field


@dataclass(frozen=True)
class WaveFunctionValue:
    re: float
    im: float

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)

    def __abs__(self):
        return math.hypot(self.re, self.im)


def psi_complex(r, t):
    """Vectorised wave function ``exp(-r^2 / (2(1+it))) / (sqrt(pi)(1+it))^(3/2)``.

    Uses the principal branch of the complex power, which is continuous for
    ``t >= 0`` because ``arg(1 + it)`` stays in ``[0, pi/2)``.
    """
    r = np.asarray(r, dtype=float)
    z = 1.0 + 1j * np.asarray(t, dtype=float)
    return np.exp(-(r * r) / (2.0 * z)) / (SQRT_PI * z) ** 1.5


def psi(r: float, t: float) -> WaveFunctionValue:
    if r < 0 or t < 0:
        raise DomainError(f"psi needs r >= 0 and t >= 0, got r={r}, t={t}")
    v = complex(psi_complex(r, t))
    return WaveFunctionValue(v.real, v.imag)


def packet_width(t):
    """Width ``sqrt(1 + t^2)`` of ``|psi|`` at time ``t``."""
    return _scalar_or_array(t, np.hypot(1.0, np.asarray(t, dtype=float)))


def bohm_velocity(position, t: float):
    """Guidance velocity ``Im(grad psi / psi) = t / (1 + t^2) * position``.

    ``position`` may have shape ``(3,)`` or ``(..., 3)``.
    """
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    return (t / (1.0 + t * t)) * np.asarray(position, dtype=float)


# --------------------------------------------------------------------------
# Trajectories and passage times


def trajectory_radius(R0, t):
    """Radius ``R0 * sqrt(1 + t^2)`` of the trajectory started at radius ``R0``."""
    R0a = np.asarray(R0, dtype=float)
    ta = np.asarray(t, dtype=float)
    if np.any(R0a <= 0):
        raise DomainError("R0 must be > 0; a particle at the origin has no trajectory")
    if np.any(ta < 0):
        raise DomainError("t must be >= 0")
    out = R0a * np.hypot(1.0, ta)
    return float(out) if out.ndim == 0 else out


def trajectory_position(R0_vec, t):
    """Position at time ``t`` of the straight radial path through ``R0_vec``."""
    return np.asarray(R0_vec, dtype=float) * math.hypot(1.0, t)


class Outcome(enum.Enum):
    CROSSED = "crossed"
    NEVER_CROSSES = "never_crosses"
    CENSORED = "censored"


@dataclass(frozen=True)
class PassageOutcome:
    """Result of timing one trajectory against the detector sphere."""

    tag: Outcome
    tau: Optional[float] = None
    t_max: Optional[float] = None

    def __post_init__(self):
        if (self.tag is Outcome.CROSSED) != (self.tau is not None):
            raise ValueError("tau is present exactly when the trajectory crossed")
        if (self.tag is Outcome.CENSORED) != (self.t_max is not None):
            raise ValueError("t_max is present exactly when the trajectory is censored")

    @classmethod
    def crossed(cls, tau: float) -> "PassageOutcome":
        return cls(Outcome.CROSSED, tau=float(tau))

    @classmethod
    def never(cls) -> "PassageOutcome":
        return cls(Outcome.NEVER_CROSSES)

    @classmethod
    def censored(cls, t_max: float) -> "PassageOutcome":
        return cls(Outcome.CENSORED, t_max=float(t_max))

    @property
    def is_crossed(self) -> bool:
        return self.tag is Outcome.CROSSED


def _check_radii(R0, d):
    if not (R0 > 0 and math.isfinite(R0)):
        raise DomainError(f"R0 must be positive and finite, got {R0}")
    if not (d > 0 and math.isfinite(d)):
        raise DomainError(f"d must be positive and finite, got {d}")


def passage_time(R0: float, d: float) -> PassageOutcome:
    """First time the radial path from ``R0`` reaches the sphere ``r = d``."""
    _check_radii(R0, d)
    if R0 > d:
        return PassageOutcome.never()
    # sqrt((d/R0)^2 - 1) written to avoid cancellation for R0 close to d
    return PassageOutcome.crossed(math.sqrt((d - R0) * (d + R0)) / R0)


def reciprocal_passage_time(R0: float, d: float) -> float:
    """``1 / tau``; zero for particles starting outside the detector.

    Raises :class:`UnboundedNuError` for ``R0 == d``, where ``tau = 0``.
    """
    _check_radii(R0, d)
    if R0 > d:
        return 0.0
    if R0 == d:
        raise UnboundedNuError(f"R0 == d == {d}: particle starts on the detector")
    return R0 / math.sqrt((d - R0) * (d + R0))


def reciprocal_passage_times(R0, d: float) -> np.ndarray:
    """Vectorised :func:`reciprocal_passage_time` over an array of start radii."""
    R0 = np.asarray(R0, dtype=float)
    if np.any(~(R0 > 0)) or not d > 0:
        raise DomainError("start radii and d must be positive")
    if np.any(R0 == d):
        raise UnboundedNuError("a start radius lies exactly on the detector")
    inside = R0 < d
    out = np.zeros_like(R0)
    r = R0[inside]
    out[inside] = r / np.sqrt((d - r) * (d + r))
    return out


# --------------------------------------------------------------------------
# Distributions


def alpha(d):
    """Probability ``2d/sqrt(pi) exp(-d^2) + erfc(d)`` that the particle starts outside ``r = d``."""
    da = np.asarray(d, dtype=float)
    if np.any(da < 0) or np.isnan(da).any():
        raise DomainError("d must be >= 0")
    out = (2.0 / SQRT_PI) * da * np.exp(-da * da) + np.asarray(erfc(da))
    return _scalar_or_array(d, out)


def radial_cdf(x):
    """CDF of the start radius under ``|psi0|^2``: ``erf(x) - 2x/sqrt(pi) exp(-x^2)``."""
    xa = np.asarray(x, dtype=float)
    out = np.asarray(erf(xa)) - (2.0 / SQRT_PI) * xa * np.exp(-xa * xa)
    return _scalar_or_array(x, out)


@dataclass(frozen=True)
class NuDistributionParams:
    d: float
    alpha: float


def nu_distribution_params(d: float) -> NuDistributionParams:
    if not d > 0:
        raise DomainError(f"d must be > 0, got {d}")
    return NuDistributionParams(d=float(d), alpha=float(alpha(d)))


def lambda_continuous(nu, d: float):
    """Continuous part of the density of ``nu``.

    ``4 d^3 / sqrt(pi) * nu^2 (1 + nu^2)^(-5/2) * exp(-nu^2 d^2 / (1 + nu^2))``
    """
    nua = np.asarray(nu, dtype=float)
    if np.any(nua < 0):
        raise DomainError("nu must be >= 0")
    if not d > 0:
        raise DomainError(f"d must be > 0, got {d}")
    h = np.hypot(1.0, nua)
    w = (nua / h) ** 2  # nu^2 / (1 + nu^2), safe for huge nu
    with np.errstate(over="ignore"):
        out = (4.0 * d**3 / SQRT_PI) * w / h**3 * np.exp(-w * d * d)
    return _scalar_or_array(nu, out)


def nu_cdf(v, d: float):
    """``P(nu <= v)``: the atom ``alpha(d)`` plus the radial CDF at ``v d / sqrt(1 + v^2)``."""
    va = np.asarray(v, dtype=float)
    if np.any(va < 0):
        raise DomainError("v must be >= 0")
    if not d > 0:
        raise DomainError(f"d must be > 0, got {d}")
    finite = np.where(np.isinf(va), 1.0, va)
    x = d * np.where(np.isinf(va), 1.0, finite / np.hypot(1.0, finite))
    out = np.clip(alpha(d) + np.asarray(radial_cdf(x)), 0.0, 1.0)
    return _scalar_or_array(v, out)


def pi_tau_continuous(tau, d: float):
    """Density of the passage time on ``(0, inf)``; the missing mass ``alpha(d)`` sits at ``tau = inf``."""
    ta = np.asarray(tau, dtype=float)
    if np.any(~(ta > 0)):
        raise DomainError("tau must be > 0")
    out = np.asarray(lambda_continuous(1.0 / ta, d)) / (ta * ta)
    return _scalar_or_array(tau, out)


def mean_nu(d: float) -> float:
    """Mean reciprocal passage time ``8 d^3 / (3 sqrt(pi)) exp(-d^2) 1F1(1/2; 5/2; d^2)``."""
    if not d >= 0 or math.isinf(d):
        raise DomainError(f"d must be finite and >= 0, got {d}")
    if d == 0:
        return 0.0
    scaled = hyp1f1_scaled(0.5, 2.5, d * d).value_scaled
    return 8.0 * d**3 / (3.0 * SQRT_PI) * scaled


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


def _graded_gauss_legendre(f, lo: float, hi: float, scale: float) -> float:
    # Panels refined geometrically towards ``hi``, where the integrand decays on ``scale``.
    edges = [hi]
    step = scale / 8.0
    while hi - edges[-1] + step < hi - lo and len(edges) < 200:
        edges.append(edges[-1] - step)
        step *= 1.5
    edges.append(lo)
    edges = np.array(edges[::-1])
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    x = mid + half * _GL_NODES[None, :]
    return float(np.sum(half * _GL_WEIGHTS[None, :] * f(x)))


def partial_first_moment(cap: float, d: float) -> float:
    """``integral_0^cap nu * lambda_continuous(nu, d) dnu``.

    Evaluated in the variable ``y = 1 / sqrt(1 + nu^2)`` where the integrand is
    ``4 d^3 / sqrt(pi) * (1 - y^2) exp(-d^2 (1 - y^2))`` on ``[y_cap, 1]``.
    """
    if not d > 0:
        raise DomainError(f"d must be > 0, got {d}")
    if not cap >= 0:
        raise DomainError(f"cap must be >= 0, got {cap}")
    if cap == 0:
        return 0.0
    y_cap = 0.0 if math.isinf(cap) else 1.0 / math.hypot(1.0, cap)
    d2 = d * d

    def integrand(y):
        s = 1.0 - y * y
        return s * np.exp(-d2 * s)

    scale = min(1.0, 1.0 / (2.0 * d2))
    return 4.0 * d**3 / SQRT_PI * _graded_gauss_legendre(integrand, y_cap, 1.0, scale)


def truncated_mean_nu(cap: float, d: float) -> float:
    """``E[min(nu, cap)]`` including the atom at zero."""
    if math.isinf(cap):
        return mean_nu(d)
    return partial_first_moment(cap, d) + cap * (1.0 - nu_cdf(cap, d))
