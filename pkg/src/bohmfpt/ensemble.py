"""Reproducible Monte-Carlo ensembles of Bohmian passage times.

Initial positions follow ``|psi0|^2 = pi**-1.5 exp(-r^2)``, i.e. three
independent normal coordinates of variance 1/2. Sample ``i`` draws its four
uniforms from block ``i`` of a Philox4x64 counter-based generator keyed by the
seed, so every sample is a pure function of ``(seed, i)``. Positions are always
computed over fixed, index-aligned blocks, which keeps results bit-identical
however the work is split across workers.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from bohmfpt.analytic import Outcome, alpha, bohm_velocity, reciprocal_passage_times
from bohmfpt.errors import ConfigurationError, IntegrationError, UnboundedNuError
from bohmfpt.trajectory import IntegratorConfig, integrate_trajectory

MODES = ("analytic", "numeric")
SAMPLE_BLOCK = 1 << 14
_TWO_POW_MINUS_53 = 2.0**-53


def _uniform_open(raw: np.ndarray) -> np.ndarray:
    # 53-bit uniforms strictly inside (0, 1)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_POW_MINUS_53


def _position_block(seed: int, block: int) -> np.ndarray:
    gen = np.random.Philox(key=seed)
    gen.advance(block * SAMPLE_BLOCK)
    raw = gen.random_raw(4 * SAMPLE_BLOCK).reshape(SAMPLE_BLOCK, 4)
    u = _uniform_open(raw)
    # Box-Muller with variance 1/2: sqrt(-2 ln u) * sqrt(1/2) = sqrt(-ln u)
    r1 = np.sqrt(-np.log(u[:, 0]))
    r2 = np.sqrt(-np.log(u[:, 2]))
    phi1 = 2.0 * math.pi * u[:, 1]
    phi2 = 2.0 * math.pi * u[:, 3]
    return np.stack([r1 * np.cos(phi1), r1 * np.sin(phi1), r2 * np.cos(phi2)], axis=1)


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ConfigurationError(f"seed must fit in an unsigned 64-bit integer, got {seed}")
    return seed


def sample_initial_positions(n: int, seed: int, start: int = 0) -> np.ndarray:
    """Positions of samples ``start .. start + n - 1`` as an ``(n, 3)`` array."""
    if n < 1:
        raise ConfigurationError(f"n must be >= 1, got {n}")
    if start < 0:
        raise ConfigurationError("start must be >= 0")
    seed = _check_seed(seed)
    stop = start + n
    first, last = start // SAMPLE_BLOCK, (stop - 1) // SAMPLE_BLOCK
    blocks = [_position_block(seed, b) for b in range(first, last + 1)]
    allpos = np.concatenate(blocks) if len(blocks) > 1 else blocks[0]
    offset = start - first * SAMPLE_BLOCK
    return allpos[offset:offset + n].copy()


def start_radii(positions: np.ndarray) -> np.ndarray:
    p = np.asarray(positions, dtype=float)
    return np.sqrt((p * p).sum(axis=1))


def push_forward(positions: np.ndarray, t: float) -> np.ndarray:
    """Move every particle along its exact trajectory to time ``t``."""
    return np.asarray(positions, dtype=float) * math.hypot(1.0, t)


@dataclass(frozen=True)
class EnsembleConfig:
    n_samples: int
    seed: int
    d: float
    mode: str = "analytic"
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)

    def __post_init__(self):
        if int(self.n_samples) < 1:
            raise ConfigurationError("n_samples must be >= 1")
        _check_seed(self.seed)
        if not (self.d > 0 and math.isfinite(self.d)):
            raise ConfigurationError(f"d must be positive and finite, got {self.d}")
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class EnsembleResult:
    """Per-sample reciprocal passage times in sample-index order.

    Censored samples are left out of ``nu_samples``; their indices are in
    ``censored_indices``. A zero in ``nu_samples`` is a never-crossing sample.
    """

    config: EnsembleConfig
    nu_samples: np.ndarray
    crossed_count: int
    never_count: int
    censored_count: int
    censored_indices: np.ndarray

    @property
    def n_total(self) -> int:
        return self.crossed_count + self.never_count + self.censored_count

    def sample_indices(self) -> np.ndarray:
        """Original sample index of each entry in ``nu_samples``."""
        keep = np.ones(self.n_total, dtype=bool)
        keep[self.censored_indices] = False
        return np.flatnonzero(keep)

    def summary(self) -> dict:
        cfg = self.config
        return {
            "d": cfg.d,
            "n": cfg.n_samples,
            "seed": cfg.seed,
            "mode": cfg.mode,
            "counts": {
                "crossed": self.crossed_count,
                "never": self.never_count,
                "censored": self.censored_count,
            },
            "alpha_analytic": float(alpha(cfg.d)),
        }


def _analytic_chunk(seed: int, start: int, n: int, d: float) -> np.ndarray:
    return reciprocal_passage_times(start_radii(sample_initial_positions(n, seed, start)), d)


def _numeric_chunk(seed: int, start: int, n: int, d: float, integrator: IntegratorConfig):
    """Returns (nu, outcome codes) where code 0/1/2 = crossed/never/censored."""
    positions = sample_initial_positions(n, seed, start)
    radii = start_radii(positions)
    nu = np.zeros(n)
    codes = np.zeros(n, dtype=np.int8)
    for j in range(n):
        if radii[j] > d:
            # the free field is radially outward: a particle outside never comes back
            codes[j] = 1
            continue
        try:
            rec = integrate_trajectory(positions[j], bohm_velocity, integrator, d)
        except IntegrationError as exc:
            exc.sample_index = start + j
            raise
        term = rec.terminal
        if term.tag is Outcome.CROSSED:
            if term.tau == 0.0:
                raise UnboundedNuError(f"sample {start + j} starts on the detector")
            nu[j] = 1.0 / term.tau
        else:
            codes[j] = 2
    return nu, codes


def _chunks(n: int, workers: int):
    # contiguous chunks; boundaries never affect values because sampling is index-keyed
    pieces = max(1, min(workers * 4, n))
    edges = np.linspace(0, n, pieces + 1).astype(int)
    return [(int(a), int(b - a)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def run_ensemble(cfg: EnsembleConfig, workers: int = 1) -> EnsembleResult:
    """Time every sample of the ensemble; deterministic in ``(cfg.seed, cfg)`` for any ``workers``."""
    if workers < 1:
        raise ConfigurationError("workers must be >= 1")
    n = int(cfg.n_samples)
    chunks = _chunks(n, workers)

    if cfg.mode == "analytic":
        if workers == 1:
            parts = [_analytic_chunk(cfg.seed, s, m, cfg.d) for s, m in chunks]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(lambda c: _analytic_chunk(cfg.seed, c[0], c[1], cfg.d), chunks))
        nu = np.concatenate(parts)
        never = int(np.count_nonzero(nu == 0.0))
        return EnsembleResult(cfg, nu, n - never, never, 0, np.zeros(0, dtype=np.int64))

    if workers == 1:
        parts = [_numeric_chunk(cfg.seed, s, m, cfg.d, cfg.integrator) for s, m in chunks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_numeric_chunk, cfg.seed, s, m, cfg.d, cfg.integrator)
                       for s, m in chunks]
            parts = [f.result() for f in futures]
    nu = np.concatenate([p[0] for p in parts])
    codes = np.concatenate([p[1] for p in parts])
    censored = np.flatnonzero(codes == 2)
    return EnsembleResult(
        cfg,
        nu[codes != 2],
        int(np.count_nonzero(codes == 0)),
        int(np.count_nonzero(codes == 1)),
        int(censored.size),
        censored,
    )


def write_nu_csv(result: EnsembleResult, path) -> None:
    """One reciprocal passage time per row, ascending, under a single ``nu`` header."""
    values = np.sort(result.nu_samples)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(["nu"])
        writer.writerows([repr(float(v))] for v in values)


def read_nu_csv(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["nu"]:
            raise ValueError(f"unexpected header {header!r}")
        return np.array([float(row[0]) for row in reader])


def write_summary_json(result: EnsembleResult, path) -> None:
    Path(path).write_text(json.dumps(result.summary(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
