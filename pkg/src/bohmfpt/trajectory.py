"""Integration of the guidance equation ``dR/dt = v(R, t)`` with first-passage detection.

The integrator is generic: ``field`` is any callable ``(position, t) -> velocity``
on 3-vectors. Integration stops at the first up-crossing of the sphere
``|R| = d`` (from inside to outside) or at ``t_max``.

Crossings are bracketed by an accepted step and then refined by bisection on
the sign of ``|R(t)| - d``, where each trial state is a fresh single step from
the start of the bracket. Since every trial step is shorter than the accepted
one, the located time inherits the integrator's accuracy rather than that of
the cubic Hermite dense output.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from bohmfpt.analytic import PassageOutcome
from bohmfpt.errors import ConfigurationError, DomainError, FieldEvaluationError, IntegrationError

VelocityField = Callable[[np.ndarray, float], np.ndarray]

METHODS = ("rk45_adaptive", "rk4_fixed")


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk45_adaptive"
    dt_init: float = 1e-3
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    t_max: float = 1e4
    event_tol_time: float = 1e-10
    max_steps: int = 1_000_000
    max_step: float = math.inf

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigurationError(f"method must be one of {METHODS}, got {self.method!r}")
        for name in ("dt_init", "rel_tol", "abs_tol", "t_max", "event_tol_time"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ConfigurationError(f"{name} must be positive and finite, got {value!r}")
        if self.max_steps < 1:
            raise ConfigurationError("max_steps must be >= 1")
        if not self.max_step > 0:
            raise ConfigurationError(f"max_step must be > 0, got {self.max_step!r}")


@dataclass
class TrajectoryRecord:
    """Accepted integration points of one path plus how it ended.

    ``velocities`` holds the field at each recorded point and feeds the cubic
    Hermite interpolation in :meth:`position_at`.
    """

    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    terminal: PassageOutcome | None = None
    n_steps: int = 0
    n_rejected: int = 0

    @property
    def radii(self) -> np.ndarray:
        return np.linalg.norm(self.positions, axis=1)

    def position_at(self, t: float) -> np.ndarray:
        times = self.times
        if not times[0] <= t <= times[-1]:
            raise DomainError(f"t={t} outside recorded range [{times[0]}, {times[-1]}]")
        i = int(np.searchsorted(times, t, side="right")) - 1
        if i >= len(times) - 1:
            return self.positions[-1].copy()
        t0, t1 = times[i], times[i + 1]
        h = t1 - t0
        s = (t - t0) / h
        y0, y1 = self.positions[i], self.positions[i + 1]
        f0, f1 = self.velocities[i], self.velocities[i + 1]
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1


def write_trajectory_csv(record: TrajectoryRecord, path) -> None:
    """Dump ``t, x, y, z, r`` for every recorded point."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(["t", "x", "y", "z", "r"])
        for t, pos, r in zip(record.times, record.positions, record.radii):
            writer.writerow([repr(float(t)), *(repr(float(c)) for c in pos), repr(float(r))])


# Dormand-Prince 5(4) tableau
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
# fifth-order minus embedded fourth-order weights
_E1 = 71 / 57600
_E3 = -71 / 16695
_E4 = 71 / 1920
_E5 = -17253 / 339200
_E6 = 22 / 525
_E7 = -1 / 40


def _eval(field: VelocityField, y: np.ndarray, t: float) -> np.ndarray:
    v = np.asarray(field(y, t), dtype=float)
    if v.shape != (3,) or not np.isfinite(v).all():
        raise FieldEvaluationError(f"velocity field returned {v!r} at t={t}, position={y}")
    return v


def _dopri_step(field, t, y, k1, h):
    """One Dormand-Prince step; returns (y_new, k7 = f(t+h, y_new), error vector)."""
    k2 = _eval(field, y + h * (_A21 * k1), t + _C2 * h)
    k3 = _eval(field, y + h * (_A31 * k1 + _A32 * k2), t + _C3 * h)
    k4 = _eval(field, y + h * (_A41 * k1 + _A42 * k2 + _A43 * k3), t + _C4 * h)
    k5 = _eval(field, y + h * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4), t + _C5 * h)
    k6 = _eval(field, y + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5), t + h)
    y_new = y + h * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
    k7 = _eval(field, y_new, t + h)
    err = h * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7)
    return y_new, k7, err


def _rk4_step(field, t, y, k1, h):
    k2 = _eval(field, y + 0.5 * h * k1, t + 0.5 * h)
    k3 = _eval(field, y + 0.5 * h * k2, t + 0.5 * h)
    k4 = _eval(field, y + h * k3, t + h)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _single_step(field, method, t, y, k1, h):
    if method == "rk4_fixed":
        return _rk4_step(field, t, y, k1, h)
    return _dopri_step(field, t, y, k1, h)[0]


def _gap(y: np.ndarray, d: float) -> float:
    return math.sqrt(float(y @ y)) - d


def locate_crossing(field: VelocityField, t0: float, y0, t1: float, d: float,
                    method: str = "rk45_adaptive", tol: float = 1e-10):
    """Bisect ``[t0, t1]`` for the time where ``|R| - d`` turns non-negative.

    Requires ``|y0| < d`` and that a single step from ``t0`` to ``t1`` ends at or
    beyond the sphere. Returns ``(tau, position_at_tau)``.
    """
    y0 = np.asarray(y0, dtype=float)
    k1 = _eval(field, y0, t0)
    lo, hi = t0, t1
    y_hi = _single_step(field, method, t0, y0, k1, t1 - t0)
    if _gap(y0, d) >= 0 or _gap(y_hi, d) < 0:
        raise DomainError("interval does not bracket an up-crossing")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        y_mid = _single_step(field, method, t0, y0, k1, mid - t0)
        if _gap(y_mid, d) >= 0:
            hi, y_hi = mid, y_mid
        else:
            lo = mid
    tau = 0.5 * (lo + hi)
    if tau == t0:
        return tau, y0
    return tau, _single_step(field, method, t0, y0, k1, tau - t0)


def _error_norm(err, y, y_new, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
    return math.sqrt(float(np.mean((err / scale) ** 2)))


def integrate_trajectory(R0_vec, field: VelocityField, cfg: IntegratorConfig | None = None,
                         d: float = 1.0) -> TrajectoryRecord:
    """Integrate from ``R0_vec`` at ``t = 0`` until the first up-crossing of ``|R| = d``.

    Starting exactly on the sphere counts as a crossing at ``tau = 0``. A path
    that reaches ``cfg.t_max`` without crossing ends as censored.
    """
    cfg = cfg or IntegratorConfig()
    y = np.array(R0_vec, dtype=float).reshape(3)
    if not np.isfinite(y).all() or not float(y @ y) > 0:
        raise DomainError("R0_vec must be a finite non-zero 3-vector")
    if not d > 0:
        raise DomainError(f"d must be > 0, got {d}")

    t = 0.0
    k1 = _eval(field, y, t)
    times = [t]
    positions = [y]
    velocities = [k1]
    record = TrajectoryRecord(np.array(times), np.array(positions), np.array(velocities))

    def finish(terminal):
        record.times = np.array(times)
        record.positions = np.array(positions)
        record.velocities = np.array(velocities)
        record.terminal = terminal
        return record

    if _gap(y, d) == 0.0:
        return finish(PassageOutcome.crossed(0.0))

    adaptive = cfg.method == "rk45_adaptive"
    # abs_tol is scaled down for starts near the origin so the relative accuracy
    # of short paths does not depend on how close to the centre they begin
    atol = cfg.abs_tol * min(1.0, math.sqrt(float(y @ y)))
    h = min(cfg.dt_init, cfg.t_max, cfg.max_step)
    n_steps = 0
    while t < cfg.t_max:
        if n_steps >= cfg.max_steps:
            finish(None)
            raise IntegrationError(f"exceeded max_steps={cfg.max_steps} at t={t}", record=record)
        h = min(h, cfg.max_step)
        remaining = cfg.t_max - t
        if h >= remaining - 16 * np.finfo(float).eps * cfg.t_max:
            h = remaining  # land on t_max instead of leaving a round-off sliver
        if h <= 16 * np.finfo(float).eps * max(1.0, abs(t)):
            finish(None)
            raise IntegrationError(f"step size underflow at t={t}", record=record)

        if adaptive:
            y_new, k_new, err = _dopri_step(field, t, y, k1, h)
            err_norm = _error_norm(err, y, y_new, cfg.rel_tol, atol)
            if err_norm > 1.0:
                record.n_rejected += 1
                h *= max(0.2, 0.9 * err_norm ** -0.2)
                continue
            factor = 5.0 if err_norm == 0.0 else min(5.0, max(0.2, 0.9 * err_norm ** -0.2))
        else:
            y_new = _rk4_step(field, t, y, k1, h)
            k_new = None
            factor = 1.0

        t_new = t + h if t + h < cfg.t_max else cfg.t_max
        n_steps += 1
        record.n_steps = n_steps

        if _gap(y, d) < 0 <= _gap(y_new, d):
            tau, y_tau = locate_crossing(field, t, y, t_new, d, cfg.method, cfg.event_tol_time)
            times.append(tau)
            positions.append(y_tau)
            velocities.append(_eval(field, y_tau, tau))
            return finish(PassageOutcome.crossed(tau))

        if k_new is None:
            k_new = _eval(field, y_new, t_new)
        t, y, k1 = t_new, y_new, k_new
        times.append(t)
        positions.append(y)
        velocities.append(k1)
        if adaptive:
            h *= factor
        else:
            h = cfg.dt_init

    return finish(PassageOutcome.censored(cfg.t_max))


def angular_drift(record: TrajectoryRecord) -> float:
    """Largest angle (radians) between any recorded position and the start position."""
    pos = np.asarray(record.positions, dtype=float)
    if len(pos) < 2:
        return 0.0
    norms = np.linalg.norm(pos, axis=1)
    if np.any(norms == 0):
        raise DomainError("record contains a point at the origin")
    start = pos[0]
    cross = np.linalg.norm(np.cross(pos, start), axis=1)
    dot = pos @ start
    return float(np.max(np.arctan2(cross, dot)))
