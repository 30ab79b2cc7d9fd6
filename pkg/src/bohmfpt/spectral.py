"""Free Schrodinger evolution on a periodic cubic grid by FFT.

Grid convention: ``n`` points per axis at ``x_j = -L + j * 2L / n`` covering
``[-L, L)``, values stored C-ordered as ``values[ix, iy, iz]``. Wavenumbers
follow ``2 pi * fftfreq(n, dx)``.

Transform normalisation: numpy's ``fftn`` carries no prefactor and ``ifftn``
carries ``1 / n**3``. The continuous transform ``psi~(k) = int exp(-i k.r) psi d^3r``
is approximated by ``dx**3 * exp(-i k.r_0) * fftn(psi)`` with ``r_0 = (-L, -L, -L)``;
see :func:`fourier_amplitude`.

With no potential the evolution is exact in one step: multiply the spectrum by
``exp(-i k^2 t / 2)``.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, replace
from pathlib import Path
from collections import OrderedDict
from collections.abc import Sequence

import numpy as np

from bohmfpt.analytic import PassageOutcome, psi_complex
from bohmfpt.errors import ConfigurationError, DegenerateFieldError, OutOfDomainError
from bohmfpt.trajectory import IntegratorConfig, integrate_trajectory

MIN_POINTS, MAX_POINTS = 16, 256
GUARD_WIDTHS = 6.0
MASK_FLOOR = 1e-12
_SNAPSHOT_HEADER = struct.Struct("<Qdd")


def _check_shape(n: int, L: float) -> None:
    if not (MIN_POINTS <= n <= MAX_POINTS and n & (n - 1) == 0):
        raise ConfigurationError(f"n_per_axis must be a power of two in [{MIN_POINTS}, {MAX_POINTS}], got {n}")
    if not (L > 0 and math.isfinite(L)):
        raise ConfigurationError(f"box half-width L must be positive, got {L}")


@dataclass
class ComplexGrid3:
    n: int
    L: float
    values: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        _check_shape(self.n, self.L)
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.n,) * 3:
            raise ConfigurationError(f"values must have shape {(self.n,) * 3}, got {self.values.shape}")
        if not np.isfinite(self.values).all():
            raise ConfigurationError("grid values must be finite")

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def axis(self) -> np.ndarray:
        return -self.L + self.dx * np.arange(self.n)

    @property
    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    def mesh(self):
        return np.meshgrid(self.axis, self.axis, self.axis, indexing="ij")

    def radius(self) -> np.ndarray:
        X, Y, Z = self.mesh()
        return np.sqrt(X * X + Y * Y + Z * Z)

    def norm(self) -> float:
        return math.sqrt(float(np.sum(np.abs(self.values) ** 2)) * self.dx**3)


def gaussian_grid(n: int = 64, L: float = 16.0, t: float = 0.0) -> ComplexGrid3:
    """Closed-form spreading Gaussian sampled on the grid at time ``t``."""
    _check_shape(n, L)
    axis = -L + (2.0 * L / n) * np.arange(n)
    X, Y, Z = np.meshgrid(axis, axis, axis, indexing="ij")
    r = np.sqrt(X * X + Y * Y + Z * Z)
    return ComplexGrid3(n, L, psi_complex(r, t), t)


def plane_wave_grid(n: int, L: float, k) -> ComplexGrid3:
    """``exp(i k.r)``; each component of ``k`` must be a multiple of ``pi / L``."""
    _check_shape(n, L)
    k = np.asarray(k, dtype=float)
    m = k * L / np.pi
    if not np.allclose(m, np.round(m), atol=1e-12, rtol=0):
        raise ConfigurationError("plane-wave wavenumbers must be periodic on the box")
    axis = -L + (2.0 * L / n) * np.arange(n)
    X, Y, Z = np.meshgrid(axis, axis, axis, indexing="ij")
    return ComplexGrid3(n, L, np.exp(1j * (k[0] * X + k[1] * Y + k[2] * Z)))


def _k_mesh(grid: ComplexGrid3):
    k = grid.wavenumbers
    return np.meshgrid(k, k, k, indexing="ij")


def _derivative_wavenumbers(grid: ComplexGrid3) -> np.ndarray:
    k = grid.wavenumbers.copy()
    k[grid.n // 2] = 0.0  # the Nyquist mode has no odd derivative
    return k


def predicted_extent(grid: ComplexGrid3, t: float) -> float:
    """Largest ``|centre| + 6 sqrt(2) * spread`` over the axes after free evolution to ``t``.

    Centre and spread follow exactly from first and second moments of position
    and wavenumber: ``var_x(t) = var_x + 2 t cov_xk + t^2 var_k``. For the
    unit Gaussian this is ``6 * sqrt(1 + t^2)``.
    """
    psi = grid.values
    rho = np.abs(psi) ** 2
    total = rho.sum()
    if total == 0:
        raise ConfigurationError("grid is identically zero")
    kd = _derivative_wavenumbers(grid)
    spec = np.fft.fftn(psi)
    extent = 0.0
    for ax in range(3):
        shape = [1, 1, 1]
        shape[ax] = grid.n
        x = grid.axis.reshape(shape)
        kx = kd.reshape(shape)
        p_psi = np.fft.ifftn(kx * spec)
        x_mean = float((rho * x).sum() / total)
        x_var = float((rho * x * x).sum() / total) - x_mean**2
        k_mean = float(np.real(np.sum(np.conj(psi) * p_psi)) / total)
        k2 = float(np.sum(np.abs(p_psi) ** 2) / total)
        k_var = k2 - k_mean**2
        xk = float(np.real(np.sum(np.conj(psi) * x * p_psi)) / total) - x_mean * k_mean
        var_t = max(0.0, x_var + 2.0 * t * xk + t * t * k_var)
        centre = x_mean + t * k_mean
        extent = max(extent, abs(centre) + GUARD_WIDTHS * math.sqrt(2.0 * var_t))
    return extent


def propagate_free(initial: ComplexGrid3, t: float) -> ComplexGrid3:
    """Evolve ``initial`` freely by ``t`` with the exact spectral multiplier."""
    if not (t >= 0 and math.isfinite(t)):
        raise ConfigurationError(f"t must be finite and >= 0, got {t}")
    _check_guard(initial, t)
    KX, KY, KZ = _k_mesh(initial)
    phase = np.exp(-0.5j * t * (KX * KX + KY * KY + KZ * KZ))
    out = np.fft.ifftn(np.fft.fftn(initial.values) * phase)
    return ComplexGrid3(initial.n, initial.L, out, initial.t + t)


def fourier_amplitude(grid: ComplexGrid3):
    """Continuous-convention transform ``(kx, ky, kz, psi~)`` of a grid, on the FFT layout."""
    KX, KY, KZ = _k_mesh(grid)
    shift = np.exp(1j * grid.L * (KX + KY + KZ))  # exp(-i k.r_0) with r_0 = -L(1, 1, 1)
    return KX, KY, KZ, grid.dx**3 * shift * np.fft.fftn(grid.values)


def l2_distance(a: ComplexGrid3, b: ComplexGrid3) -> float:
    if a.n != b.n or a.L != b.L:
        raise ConfigurationError("grids differ in shape")
    return math.sqrt(float(np.sum(np.abs(a.values - b.values) ** 2)) * a.dx**3)


def second_moment(grid: ComplexGrid3) -> float:
    """``<r^2>`` of the normalised density ``|psi|^2``."""
    rho = np.abs(grid.values) ** 2
    X, Y, Z = grid.mesh()
    return float(np.sum(rho * (X * X + Y * Y + Z * Z)) / np.sum(rho))


@dataclass
class VelocityGrid:
    """Bohmian velocity on the lattice; masked points hold NaN."""

    n: int
    L: float
    t: float
    values: np.ndarray  # shape (3, n, n, n)
    mask: np.ndarray  # True where the velocity is defined

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.n


def velocity_field_from_grid(grid: ComplexGrid3, floor: float = MASK_FLOOR) -> VelocityGrid:
    """``Im(conj(psi) grad psi) / |psi|^2`` with spectral gradients.

    Points where ``|psi|^2 < floor * max |psi|^2`` are masked out.
    """
    psi = grid.values
    rho = np.abs(psi) ** 2
    peak = rho.max()
    mask = rho >= floor * peak if peak > 0 else np.zeros(rho.shape, dtype=bool)
    if not mask.any():
        raise DegenerateFieldError("every grid point fell below the density floor")
    spec = np.fft.fftn(psi)
    kd = _derivative_wavenumbers(grid)
    vel = np.full((3,) + psi.shape, np.nan)
    safe_rho = np.where(mask, rho, 1.0)
    for ax in range(3):
        shape = [1, 1, 1]
        shape[ax] = grid.n
        grad = np.fft.ifftn(1j * kd.reshape(shape) * spec)
        comp = np.imag(np.conj(psi) * grad) / safe_rho
        vel[ax] = np.where(mask, comp, np.nan)
    return VelocityGrid(grid.n, grid.L, grid.t, vel, mask)


def _check_guard(grid: ComplexGrid3, t: float) -> None:
    needed = predicted_extent(grid, t)
    if needed > grid.L:
        raise ConfigurationError(
            f"box half-width L={grid.L} is too small for the packet at t={grid.t + t}: "
            f"need L >= {needed:.3g} to keep wrap-around below 1e-10 (suggest L={math.ceil(needed)})"
        )


class VelocitySequence(Sequence):
    """Velocity grids of ``initial`` freely evolved to each of ``times``, built on demand.

    Only ``cache_size`` grids are held at once, so long sequences on large grids
    stay within memory as long as they are visited roughly in time order.
    """

    def __init__(self, initial: ComplexGrid3, times: Sequence[float],
                 floor: float = MASK_FLOOR, cache_size: int = 4):
        self.times = np.asarray(times, dtype=float)
        if self.times.ndim != 1 or self.times.size == 0:
            raise ConfigurationError("times must be a non-empty 1-D sequence")
        if np.any(self.times < initial.t) or np.any(np.diff(self.times) <= 0):
            raise ConfigurationError("times must increase strictly and not precede the initial grid")
        # the packet spread is convex in t, so the two ends bound the whole range
        _check_guard(initial, float(self.times[0] - initial.t))
        _check_guard(initial, float(self.times[-1] - initial.t))
        self.initial = initial
        self.n, self.L, self.dx = initial.n, initial.L, initial.dx
        self.floor = floor
        self._spec0 = np.fft.fftn(initial.values)
        KX, KY, KZ = _k_mesh(initial)
        self._k2 = KX * KX + KY * KY + KZ * KZ
        self._cache: OrderedDict[int, VelocityGrid] = OrderedDict()
        self._cache_size = max(2, cache_size)

    def __len__(self) -> int:
        return self.times.size

    def __getitem__(self, m):
        if isinstance(m, slice):
            return [self[i] for i in range(*m.indices(len(self)))]
        m = range(len(self))[m]
        hit = self._cache.get(m)
        if hit is not None:
            self._cache.move_to_end(m)
            return hit
        t = float(self.times[m])
        spec = self._spec0 * np.exp(-0.5j * (t - self.initial.t) * self._k2)
        evolved = ComplexGrid3(self.n, self.L, np.fft.ifftn(spec), t)
        grid = velocity_field_from_grid(evolved, self.floor)
        self._cache[m] = grid
        if len(self._cache) > self._cache_size:
            self._cache.popitem(last=False)
        return grid


def velocity_sequence(initial: ComplexGrid3, times: Sequence[float],
                      floor: float = MASK_FLOOR) -> list[VelocityGrid]:
    """Eagerly computed velocity grids of ``initial`` evolved to each of ``times``."""
    seq = VelocitySequence(initial, times, floor, cache_size=2)
    return [seq[m] for m in range(len(seq))]


class GridVelocityInterpolator:
    """Trilinear-in-space, linear-in-time interpolation of a velocity-grid sequence."""

    def __init__(self, fields: Sequence[VelocityGrid]):
        if len(fields) < 2:
            raise ConfigurationError("need at least two velocity grids")
        if isinstance(fields, VelocitySequence):
            self.times = fields.times
            self.n, self.L, self.dx = fields.n, fields.L, fields.dx
        else:
            first = fields[0]
            if any(f.n != first.n or f.L != first.L for f in fields):
                raise ConfigurationError("all velocity grids must share n and L")
            self.times = np.array([f.t for f in fields], dtype=float)
            self.n, self.L, self.dx = first.n, first.L, first.dx
        if np.any(np.diff(self.times) <= 0):
            raise ConfigurationError("velocity grids must have strictly increasing times")
        self._fields = fields

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def min_spacing(self) -> float:
        return float(np.min(np.diff(self.times)))

    def _spatial(self, m, idx, frac):
        i, j, k = idx
        fx, fy, fz = frac
        c = self._fields[m].values[:, i:i + 2, j:j + 2, k:k + 2]
        c = c[:, 0] * (1 - fx) + c[:, 1] * fx
        c = c[:, 0] * (1 - fy) + c[:, 1] * fy
        return c[:, 0] * (1 - fz) + c[:, 1] * fz

    def __call__(self, position, t: float) -> np.ndarray:
        s = (np.asarray(position, dtype=float) + self.L) / self.dx
        base = np.floor(s)
        if np.any(base < 0) or np.any(base > self.n - 2):
            raise OutOfDomainError(f"position {position} left the grid box [-{self.L}, {self.L - self.dx}]")
        idx = base.astype(int)
        frac = s - base
        times = self.times
        if t <= times[0]:
            return self._spatial(0, idx, frac)
        if t >= times[-1]:
            return self._spatial(len(times) - 1, idx, frac)
        m = int(np.searchsorted(times, t, side="right")) - 1
        w = (t - times[m]) / (times[m + 1] - times[m])
        return (1 - w) * self._spatial(m, idx, frac) + w * self._spatial(m + 1, idx, frac)


def trajectories_from_grid(fields: Sequence[VelocityGrid], R0_vec, d: float,
                           cfg: IntegratorConfig | None = None) -> PassageOutcome:
    """Time a trajectory through a sampled velocity field.

    Integration runs no further than the last grid time; a path that has not
    crossed by then is censored there. Steps are capped at the snapshot spacing
    so that a lazily built :class:`VelocitySequence` is walked in time order.
    """
    interp = GridVelocityInterpolator(fields)
    cfg = cfg or IntegratorConfig()
    cfg = replace(
        cfg,
        t_max=min(cfg.t_max, interp.t_end),
        dt_init=min(cfg.dt_init, interp.t_end),
        max_step=min(cfg.max_step, interp.min_spacing),
    )
    return integrate_trajectory(R0_vec, interp, cfg, d).terminal


def write_snapshot(grid: ComplexGrid3, path) -> Path:
    """Write ``grid`` as a flat little-endian binary file plus a ``.json`` sidecar.

    Layout: ``uint64 n, float64 L, float64 t`` followed by ``n**3`` complex
    values as interleaved ``(re, im)`` float64 pairs in C order ``[ix, iy, iz]``.
    """
    path = Path(path)
    payload = np.empty(grid.n**3 * 2, dtype="<f8")
    flat = grid.values.ravel(order="C")
    payload[0::2] = flat.real
    payload[1::2] = flat.imag
    with open(path, "wb") as fh:
        fh.write(_SNAPSHOT_HEADER.pack(grid.n, grid.L, grid.t))
        fh.write(payload.tobytes())
    sidecar = path.with_name(path.name + ".json")
    sidecar.write_text(json.dumps({
        "format": "bohmfpt-grid-v1",
        "n": grid.n,
        "L": grid.L,
        "t": grid.t,
        "header": "uint64 n, float64 L, float64 t (little-endian)",
        "header_bytes": _SNAPSHOT_HEADER.size,
        "payload": "interleaved re, im float64 little-endian, C order [ix, iy, iz]",
        "axis": "x_j = -L + j * 2L / n",
        "norm": grid.norm(),
    }, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return sidecar


def read_snapshot(path) -> ComplexGrid3:
    data = Path(path).read_bytes()
    n, L, t = _SNAPSHOT_HEADER.unpack_from(data)
    payload = np.frombuffer(data, dtype="<f8", offset=_SNAPSHOT_HEADER.size)
    if payload.size != 2 * n**3:
        raise ConfigurationError(f"snapshot payload has {payload.size} floats, expected {2 * n**3}")
    values = (payload[0::2] + 1j * payload[1::2]).reshape((n, n, n))
    return ComplexGrid3(int(n), float(L), values, float(t))


def closed_form_check(n: int = 64, L: float = 16.0, t: float = 2.0) -> dict:
    """Propagate the unit Gaussian spectrally and compare it with the exact packet.

    Velocities are compared inside ``3 * sigma(t)``; the relative error is taken
    pointwise and skips the origin, where the exact velocity vanishes.
    """
    initial = gaussian_grid(n, L, 0.0)
    evolved = propagate_free(initial, t)
    exact = gaussian_grid(n, L, t)
    field = velocity_field_from_grid(evolved)
    X, Y, Z = evolved.mesh()
    R = np.sqrt(X * X + Y * Y + Z * Z)
    rate = t / (1.0 + t * t)
    inside = (R <= 3.0 * math.sqrt(1.0 + t * t)) & field.mask
    diff = np.sqrt((field.values[0] - rate * X) ** 2 + (field.values[1] - rate * Y) ** 2
                   + (field.values[2] - rate * Z) ** 2)
    abs_err = float(diff[inside].max())
    away = inside & (R > 0)
    rel_err = float((diff[away] / (rate * R[away])).max()) if rate > 0 else None
    width_ratio = second_moment(evolved) / second_moment(initial)
    return {
        "n": n,
        "L": L,
        "t": t,
        "l2_error": l2_distance(evolved, exact),
        "norm_initial": initial.norm(),
        "norm_drift": abs(evolved.norm() - initial.norm()),
        "velocity_max_abs_error": abs_err,
        "velocity_max_rel_error": rel_err,
        "width_ratio": width_ratio,
        "width_ratio_exact": 1.0 + t * t,
        "width_ratio_rel_error": abs(width_ratio / (1.0 + t * t) - 1.0),
    }
