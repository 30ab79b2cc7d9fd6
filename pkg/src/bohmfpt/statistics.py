"""Empirical reciprocal-passage-time laws compared against the closed forms."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from bohmfpt.analytic import alpha, mean_nu, nu_cdf, truncated_mean_nu
from bohmfpt.errors import DomainError

DEFAULT_K_FRACTION = 0.01
DEFAULT_CAP = 50.0


@dataclass(frozen=True)
class EmpiricalNuDistribution:
    """Atom at zero plus the sorted positive samples.

    ``n_total`` counts every sample, censored ones included, so
    ``atom_mass_at_zero = (n_total - len(positive_samples) - censored) / n_total``.
    Comparisons against the model CDF use only the ``n_observed`` uncensored samples.
    """

    atom_mass_at_zero: float
    positive_samples: np.ndarray
    n_total: int
    censored: int = 0

    @property
    def n_observed(self) -> int:
        return self.n_total - self.censored

    @property
    def n_zero(self) -> int:
        return self.n_observed - len(self.positive_samples)


def from_samples(nu, censored: int = 0) -> EmpiricalNuDistribution:
    nu = np.asarray(nu, dtype=float)
    if np.any(nu < 0) or not np.isfinite(nu).all():
        raise DomainError("reciprocal passage times must be finite and >= 0")
    positive = np.sort(nu[nu > 0])
    n = int(nu.size) + int(censored)
    atom = (nu.size - positive.size) / n if n else 0.0
    return EmpiricalNuDistribution(atom, positive, n, int(censored))


def build_empirical(result) -> EmpiricalNuDistribution:
    """Condense an :class:`~bohmfpt.ensemble.EnsembleResult` (or a rebuilt distribution)."""
    if isinstance(result, EmpiricalNuDistribution):
        return EmpiricalNuDistribution(result.atom_mass_at_zero, np.sort(result.positive_samples),
                                       result.n_total, result.censored)
    return from_samples(result.nu_samples, censored=result.censored_count)


def ks_distance(emp: EmpiricalNuDistribution, d: float) -> float:
    """Sup-norm distance between the empirical CDF (atom included) and ``nu_cdf(., d)``."""
    n = emp.n_observed
    if n < 100:
        raise DomainError(f"need at least 100 uncensored samples, got {n}")
    x = emp.positive_samples
    # At 0 both CDFs jump: compare the atoms. On (0, inf) the model is continuous,
    # so the supremum is reached just before or at a sample.
    dist = abs(emp.n_zero / n - alpha(d))
    if x.size:
        model = np.asarray(nu_cdf(x, d))
        ranks = emp.n_zero + np.arange(1, x.size + 1)
        upper = np.max(ranks / n - model)
        lower = np.max(model - (ranks - 1) / n)
        dist = max(dist, upper, lower)
    return float(dist)


def hill_estimator(samples, k: int) -> float:
    """Hill estimate of the survival-function exponent from the ``k`` largest samples."""
    x = np.sort(np.asarray(samples, dtype=float))
    if not 1 <= k < x.size:
        raise DomainError(f"k must lie in [1, {x.size - 1}], got {k}")
    top = x[-k:]
    threshold = x[-k - 1]
    if threshold <= 0:
        raise DomainError("Hill estimator needs positive order statistics")
    return float(1.0 / np.mean(np.log(top / threshold)))


def tail_index(emp: EmpiricalNuDistribution, k_fraction: float = DEFAULT_K_FRACTION) -> float:
    """Hill tail index over the top ``k_fraction`` of the positive samples.

    The continuous density decays like ``nu**-3``, so the expected index is 2.
    """
    if not 0 < k_fraction <= 0.2:
        raise DomainError(f"k_fraction must lie in (0, 0.2], got {k_fraction}")
    m = emp.positive_samples.size
    if m < 500:
        raise DomainError(f"need at least 500 positive samples, got {m}")
    k = max(1, int(math.floor(k_fraction * m)))
    return hill_estimator(emp.positive_samples, k)


def truncated_mean(emp: EmpiricalNuDistribution, cap: float) -> float:
    """Sample mean of ``min(nu, cap)``, zeros included."""
    if not cap > 0:
        raise DomainError(f"cap must be > 0, got {cap}")
    if emp.n_observed == 0:
        raise DomainError("empty distribution")
    return float(np.sum(np.minimum(emp.positive_samples, cap)) / emp.n_observed)


def report(emp: EmpiricalNuDistribution, d: float, cap: float = DEFAULT_CAP,
           k_fraction: float = DEFAULT_K_FRACTION) -> dict:
    """Comparison summary; fields that need more samples than available are ``None``."""
    ks = ks_distance(emp, d) if emp.n_observed >= 100 else None
    hill = tail_index(emp, k_fraction) if emp.positive_samples.size >= 500 else None
    return {
        "n": emp.n_total,
        "d": d,
        "ks": ks,
        "atom_emp": emp.atom_mass_at_zero,
        "atom_analytic": float(alpha(d)),
        "hill_index": hill,
        "truncated_mean_emp": truncated_mean(emp, cap),
        "truncated_mean_analytic": truncated_mean_nu(cap, d),
        "mean_nu_analytic": mean_nu(d),
        "cap": cap,
        "k_fraction": k_fraction,
        "censored": emp.censored,
    }
