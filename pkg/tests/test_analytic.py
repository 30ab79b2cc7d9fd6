import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from bohmfpt.analytic import (
    Outcome,
    PassageOutcome,
    alpha,
    bohm_velocity,
    lambda_continuous,
    mean_nu,
    nu_cdf,
    nu_distribution_params,
    packet_width,
    partial_first_moment,
    passage_time,
    pi_tau_continuous,
    psi,
    psi_complex,
    radial_cdf,
    reciprocal_passage_time,
    reciprocal_passage_times,
    trajectory_position,
    trajectory_radius,
    truncated_mean_nu,
)
from bohmfpt.errors import DomainError, UnboundedNuError

SQRT_PI = math.sqrt(math.pi)
QUAD = dict(epsabs=0, epsrel=1e-13, limit=200)


def integrate_lambda(f, d):
    # split where the density lives: around 1/d and in the power-law tail
    edges = [0.0, 1.0 / d, 10.0 / d, np.inf]
    return sum(integrate.quad(f, a, b, **QUAD)[0] for a, b in zip(edges[:-1], edges[1:]))


# --------------------------------------------------------------------------
# wave function and velocity


def test_psi_initial_state():
    for r in (0.0, 0.3, 1.0, 2.5):
        v = psi(r, 0.0)
        assert v.re == pytest.approx(math.pi**-0.75 * math.exp(-r * r / 2), rel=1e-15)
        assert v.im == 0.0


@pytest.mark.parametrize("t", [0.0, 0.5, 1.0, 3.0, 20.0])
def test_psi_density_at_origin(t):
    assert abs(psi(0.0, t)) ** 2 == pytest.approx(math.pi**-1.5 * (1 + t * t) ** -1.5, rel=1e-14)


@pytest.mark.parametrize("t", [0.0, 1.0, 5.0])
def test_psi_normalised(t):
    norm, _ = integrate.quad(lambda r: 4 * math.pi * r * r * abs(psi_complex(r, t)) ** 2,
                             0, np.inf, epsabs=0, epsrel=1e-12)
    assert norm == pytest.approx(1.0, abs=1e-10)


def test_psi_matches_high_precision_formula():
    mpmath.mp.dps = 40
    rng = np.random.default_rng(3)
    for r, t in zip(rng.uniform(0, 4, 20), rng.uniform(0, 6, 20)):
        z = 1 + 1j * mpmath.mpf(t)
        exact = complex(mpmath.exp(-mpmath.mpf(r) ** 2 / (2 * z)) / (mpmath.sqrt(mpmath.pi) * z) ** 1.5)
        assert abs(psi_complex(r, t) - exact) <= 1e-14 * abs(exact)


def test_psi_width():
    assert packet_width(0.0) == 1.0
    assert packet_width(math.sqrt(3)) == pytest.approx(2.0, rel=1e-15)


def test_psi_principal_branch_continuous_in_time():
    ts = np.linspace(0, 50, 200_001)
    values = psi_complex(1.3, ts)
    jumps = np.abs(np.diff(values))
    assert jumps.max() < 1e-3
    assert np.isfinite(values).all()


def test_psi_rejects_negative_arguments():
    with pytest.raises(DomainError):
        psi(-1.0, 0.0)
    with pytest.raises(DomainError):
        psi(1.0, -1.0)


def test_velocity_vanishes_initially():
    assert np.array_equal(bohm_velocity(np.array([1.0, -2.0, 3.0]), 0.0), np.zeros(3))


def test_velocity_simple_value():
    assert np.allclose(bohm_velocity(np.array([2.0, 0.0, 0.0]), 1.0), [1.0, 0.0, 0.0], rtol=0, atol=1e-16)


def test_velocity_equals_phase_gradient():
    # Im(grad psi / psi) by high-precision numerical differentiation of the closed form
    mpmath.mp.dps = 40
    rng = np.random.default_rng(11)

    def psi_mp(x, y, z, t):
        w = 1 + 1j * t
        return mpmath.exp(-(x * x + y * y + z * z) / (2 * w)) / (mpmath.sqrt(mpmath.pi) * w) ** 1.5

    for _ in range(20):
        pos = rng.normal(size=3) * 1.5
        t = float(rng.uniform(0.05, 5))
        p = [mpmath.mpf(c) for c in pos]
        value = psi_mp(*p, t)
        grad = [
            mpmath.diff(lambda x: psi_mp(x, p[1], p[2], t), p[0]),
            mpmath.diff(lambda y: psi_mp(p[0], y, p[2], t), p[1]),
            mpmath.diff(lambda z: psi_mp(p[0], p[1], z, t), p[2]),
        ]
        expected = np.array([float(mpmath.im(g / value)) for g in grad])
        got = bohm_velocity(pos, t)
        assert np.linalg.norm(got - expected) <= 1e-10 * np.linalg.norm(expected)


def test_velocity_vectorised_over_positions():
    pts = np.arange(12.0).reshape(4, 3)
    assert np.allclose(bohm_velocity(pts, 2.0), pts * 0.4)


# --------------------------------------------------------------------------
# trajectories and passage times


def test_trajectory_radius_examples():
    assert trajectory_radius(1.0, 0.0) == 1.0
    assert trajectory_radius(2.0, math.sqrt(3.0)) == pytest.approx(4.0, rel=1e-15)
    assert abs(trajectory_radius(0.5, 1e6) / 1e6 - 0.5) <= 1e-12


@pytest.mark.parametrize("bad", [0.0, -0.1])
def test_trajectory_radius_rejects_non_positive_start(bad):
    with pytest.raises(DomainError):
        trajectory_radius(bad, 1.0)


def test_trajectory_position_is_radial():
    start = np.array([0.3, -0.4, 1.2])
    end = trajectory_position(start, 7.0)
    assert np.allclose(np.cross(start, end), 0.0, atol=1e-14)
    assert np.linalg.norm(end) == pytest.approx(np.linalg.norm(start) * math.sqrt(50.0), rel=1e-15)


def test_passage_time_examples():
    d = 3.0
    assert passage_time(d, d) == PassageOutcome.crossed(0.0)
    out = passage_time(d / math.sqrt(2), d)
    assert out.tag is Outcome.CROSSED
    assert out.tau == pytest.approx(1.0, rel=1e-15)
    assert passage_time(2 * d, d).tag is Outcome.NEVER_CROSSES
    assert passage_time(2 * d, d).tau is None


def test_passage_outcome_field_presence():
    with pytest.raises(ValueError):
        PassageOutcome(Outcome.CROSSED)
    with pytest.raises(ValueError):
        PassageOutcome(Outcome.NEVER_CROSSES, tau=1.0)
    with pytest.raises(ValueError):
        PassageOutcome(Outcome.CENSORED)
    assert PassageOutcome.censored(5.0).t_max == 5.0


def test_reciprocal_examples():
    d = 1.7
    assert reciprocal_passage_time(d / math.sqrt(2), d) == pytest.approx(1.0, rel=1e-15)
    assert reciprocal_passage_time(2 * d, d) == 0.0
    with pytest.raises(UnboundedNuError):
        reciprocal_passage_time(d, d)
    with pytest.raises(UnboundedNuError):
        reciprocal_passage_times(np.array([0.5, d]), d)


def test_reciprocal_times_passage_is_one():
    rng = np.random.default_rng(5)
    d = 2.0
    for r0 in rng.uniform(0, d, 100):
        if r0 == 0:
            continue
        tau = passage_time(r0, d).tau
        assert reciprocal_passage_time(r0, d) * tau == pytest.approx(1.0, rel=1e-14)


def test_vectorised_reciprocal_matches_scalar():
    rng = np.random.default_rng(9)
    r0 = rng.uniform(0.01, 4.0, 1000)
    vec = reciprocal_passage_times(r0, 2.0)
    assert np.array_equal(vec, [reciprocal_passage_time(r, 2.0) for r in r0])


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=1e-3, max_value=0.999), st.floats(min_value=1e-3, max_value=0.999),
       st.floats(min_value=0.1, max_value=30.0))
def test_passage_time_monotone_in_start_radius(f1, f2, d):
    if f1 == f2:
        return
    lo, hi = sorted((f1 * d, f2 * d))
    if lo == hi:
        return
    assert passage_time(lo, d).tau > passage_time(hi, d).tau
    assert reciprocal_passage_time(lo, d) < reciprocal_passage_time(hi, d)


def test_passage_time_domain_errors():
    for args in [(0.0, 1.0), (-1.0, 1.0), (1.0, 0.0), (float("nan"), 1.0)]:
        with pytest.raises(DomainError):
            passage_time(*args)


# --------------------------------------------------------------------------
# distributions


def test_alpha_endpoints():
    assert alpha(0.0) == 1.0
    assert alpha(30.0) < 1e-300


def test_alpha_against_quadrature():
    for d in (0.1, 0.5, 1.0, 2.0, 5.0, 10.0):
        # shift R = d + s so that the exp(-d^2) factor is handled exactly
        scaled, _ = integrate.quad(lambda s: (d + s) ** 2 * math.exp(-2 * d * s - s * s), 0, np.inf,
                                   epsabs=0, epsrel=1e-13)
        expected = 4 / SQRT_PI * scaled * math.exp(-d * d)
        assert alpha(d) == pytest.approx(expected, rel=1e-12)


def test_alpha_monotone_and_bounded():
    d = np.linspace(0, 12, 5001)
    a = alpha(d)
    assert np.all(np.diff(a) <= 0)
    assert np.all((a >= 0) & (a <= 1))
    with pytest.raises(DomainError):
        alpha(-0.1)


def test_nu_distribution_params():
    p = nu_distribution_params(2.0)
    assert p.alpha == alpha(2.0)
    with pytest.raises(DomainError):
        nu_distribution_params(0.0)


def test_lambda_examples():
    assert lambda_continuous(0.0, 3.0) == 0.0
    expected = 4 / SQRT_PI * 2**-2.5 * math.exp(-0.5)
    assert lambda_continuous(1.0, 1.0) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("d", [0.5, 2.0, 5.0, 10.0])
def test_lambda_normalisation(d):
    mass = integrate_lambda(lambda v: lambda_continuous(v, d), d)
    assert alpha(d) + mass == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("d", [0.5, 2.0, 5.0])
def test_lambda_tail_law(d):
    limit = 4 * d**3 / SQRT_PI * math.exp(-d * d)
    for v in (1e3, 1e4):
        assert v**3 * lambda_continuous(v, d) == pytest.approx(limit, rel=1e-3)


@pytest.mark.parametrize("d", [0.5, 2.0, 5.0])
def test_lambda_small_nu_law(d):
    limit = 4 * d**3 / SQRT_PI
    assert lambda_continuous(1e-6, d) / 1e-12 == pytest.approx(limit, rel=1e-9)


def test_lambda_finite_for_huge_nu():
    assert lambda_continuous(1e200, 2.0) == 0.0
    assert np.isfinite(lambda_continuous(np.array([1e10, 1e150]), 30.0)).all()


def test_lambda_non_negative_and_domain():
    v = np.linspace(0, 50, 1001)
    assert np.all(lambda_continuous(v, 3.0) >= 0)
    with pytest.raises(DomainError):
        lambda_continuous(-1.0, 1.0)
    with pytest.raises(DomainError):
        lambda_continuous(1.0, 0.0)


def test_large_detector_mass_concentrates_at_zero():
    d = 30.0
    for eps in (0.5, 0.2, 0.1):
        mass, _ = integrate.quad(lambda v: lambda_continuous(v, d), 0, eps, epsabs=0, epsrel=1e-12, limit=200)
        assert mass >= 0.99 * (1 - alpha(d))


def test_small_detector_is_almost_all_atom():
    assert alpha(0.05) > 0.9999


def test_nu_cdf_examples():
    d = 2.0
    assert nu_cdf(0.0, d) == alpha(d)
    assert nu_cdf(np.inf, d) == 1.0
    assert nu_cdf(1e12, d) == pytest.approx(1.0, abs=1e-15)
    for v in (0.5, 1.0, 3.0):
        mass, _ = integrate.quad(lambda x: lambda_continuous(x, d), 0, v, epsabs=0, epsrel=1e-13)
        assert nu_cdf(v, d) == pytest.approx(alpha(d) + mass, abs=1e-9)


def test_nu_cdf_monotone():
    v = np.linspace(0, 100, 10001)
    c = nu_cdf(v, 1.5)
    assert np.all(np.diff(c) >= 0)
    assert np.all((c >= 0) & (c <= 1))


def test_radial_cdf_limits():
    assert radial_cdf(0.0) == 0.0
    assert radial_cdf(40.0) == 1.0


def test_pi_tau_normalisation():
    d = 2.0
    mass = sum(integrate.quad(lambda t: pi_tau_continuous(t, d), a, b, epsabs=0, epsrel=1e-13, limit=200)[0]
               for a, b in [(0, 1), (1, 10), (10, np.inf)])
    assert mass == pytest.approx(1 - alpha(d), abs=1e-9)


def test_pi_tau_change_of_variables():
    assert pi_tau_continuous(0.7, 1.0) * 0.7**2 == pytest.approx(lambda_continuous(1 / 0.7, 1.0), rel=1e-15)


def test_pi_tau_mode_moves_out_with_detector_radius():
    taus = np.linspace(0.01, 60, 60001)
    modes = [taus[np.argmax(pi_tau_continuous(taus, d))] for d in (2.0, 5.0, 10.0)]
    assert modes[0] < modes[1] < modes[2]


@pytest.mark.parametrize("bad", [0.0, -1.0])
def test_pi_tau_rejects_non_positive(bad):
    with pytest.raises(DomainError):
        pi_tau_continuous(bad, 1.0)


def test_mean_nu_examples():
    assert mean_nu(0.0) == 0.0
    first = integrate_lambda(lambda v: v * lambda_continuous(v, 2.0), 2.0)
    assert mean_nu(2.0) == pytest.approx(first, rel=1e-8)
    d = 30.0
    assert mean_nu(d) == pytest.approx(2 / (SQRT_PI * d), rel=2e-3)


@pytest.mark.parametrize("d", [0.5, 5.0, 10.0])
def test_mean_nu_against_quadrature(d):
    first = integrate_lambda(lambda v: v * lambda_continuous(v, d), d)
    assert mean_nu(d) == pytest.approx(first, rel=1e-8)


def test_mean_nu_vanishes_in_both_limits():
    assert mean_nu(1e-3) < 1e-8
    assert mean_nu(1e4) < 2e-4
    with pytest.raises(DomainError):
        mean_nu(-1.0)


@pytest.mark.parametrize("d", [0.5, 2.0, 8.0])
@pytest.mark.parametrize("cap", [0.1, 1.0, 50.0])
def test_partial_first_moment_against_quadrature(d, cap):
    expected, _ = integrate.quad(lambda v: v * lambda_continuous(v, d), 0, cap, epsabs=0, epsrel=1e-13, limit=200)
    assert partial_first_moment(cap, d) == pytest.approx(expected, rel=1e-10)


def test_truncated_mean_grows_towards_mean():
    d = 2.0
    caps = np.geomspace(0.01, 1e8, 60)
    values = [truncated_mean_nu(c, d) for c in caps]
    assert np.all(np.diff(values) > 0)
    assert values[-1] < mean_nu(d)
    assert values[-1] == pytest.approx(mean_nu(d), rel=1e-6)
    assert truncated_mean_nu(np.inf, d) == mean_nu(d)
