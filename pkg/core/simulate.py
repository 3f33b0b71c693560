"""
core/simulate.py
────────────────
Poisson process sampling on [0, T).

  sample_homogeneous    exponential gaps
  sample_inhomogeneous  thinning against model.lambda_max
  sample_many           M independent realizations, one RNG substream each

Substreams are Philox generators keyed by (seed, replicate..., realization),
so a realization never depends on how many others are drawn or in which order.
"""

from __future__ import annotations

import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
from shared.config import DEFAULT_SEED
from shared.errors import ConfigurationError, DomainError
from core.events import EventSeries
from core.models import IntensityModel

logger = logging.getLogger("Simulate")


@dataclass(frozen=True)
class SimulationConfig:
    seed: int = DEFAULT_SEED
    M: int = 1

    def __post_init__(self):
        if self.M < 1:
            raise ConfigurationError(f"M must be >= 1, got {self.M}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigurationError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent counter-based generator for the stream id ``key``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=tuple(key))))


# ─── Helpers ──────────────────────────────────────────────────────────────────

def _resample_duplicates(times: np.ndarray, draw_one: Callable[[], float]) -> np.ndarray:
    """Replace repeated times by fresh draws from the same per-point law."""
    times = np.sort(times)
    while times.size > 1:
        dup = np.flatnonzero(np.diff(times) == 0.0) + 1
        if dup.size == 0:
            break
        logger.debug("resampling %d duplicate event time(s)", dup.size)
        times[dup] = [draw_one() for _ in dup]
        times = np.sort(times)
    return times


# ─── Sampling ─────────────────────────────────────────────────────────────────

def sample_homogeneous(rate: float, T: float, rng: np.random.Generator) -> EventSeries:
    if rate < 0:
        raise DomainError(f"rate must be >= 0, got {rate}")
    if not T > 0:
        raise DomainError(f"duration T must be positive, got {T}")
    if rate == 0:
        return EventSeries(np.empty(0), T)

    mean = rate * T
    chunk = int(mean + 6.0 * np.sqrt(mean) + 16)
    arrivals = np.cumsum(rng.exponential(1.0 / rate, size=chunk))
    while arrivals[-1] < T:
        more = arrivals[-1] + np.cumsum(rng.exponential(1.0 / rate, size=chunk))
        arrivals = np.concatenate((arrivals, more))
    times = arrivals[arrivals < T]
    times = _resample_duplicates(times, lambda: float(rng.uniform(0.0, T)))
    return EventSeries(times, T)


def _thin(model: IntensityModel, rng: np.random.Generator, n: int, lam_max: float) -> np.ndarray:
    candidates = rng.uniform(0.0, model.T, size=n)
    u = rng.uniform(size=n)
    lam = model.rate(candidates)
    if lam.size and np.max(lam) > lam_max * (1.0 + 1e-9):
        raise ConfigurationError(
            f"{model.kind.value}: λ(t)={np.max(lam):.6g} exceeds lambda_max={lam_max:.6g}"
        )
    return candidates[u * lam_max < lam]


def sample_inhomogeneous(model: IntensityModel, rng: np.random.Generator) -> EventSeries:
    """Lewis–Shedler thinning: Poisson(λmax·T) candidates, keep with prob λ(t)/λmax."""
    lam_max = float(model.lambda_max)
    if not np.isfinite(lam_max):
        raise ConfigurationError(f"{model.kind.value}: lambda_max must be finite")
    if lam_max <= 0.0:
        if model.mass(0.0, model.T) > 0.0:
            raise ConfigurationError(f"{model.kind.value}: lambda_max <= 0 with nonzero intensity")
        return EventSeries(np.empty(0), model.T)

    n = int(rng.poisson(lam_max * model.T))
    times = _thin(model, rng, n, lam_max)

    def draw_one() -> float:
        while True:
            accepted = _thin(model, rng, 64, lam_max)
            if accepted.size:
                return float(accepted[0])

    times = _resample_duplicates(times, draw_one)
    return EventSeries(times, model.T)


def sample_many(
    model: IntensityModel,
    config: SimulationConfig,
    replicate: Optional[int] = None,
    jobs: int = 1,
) -> List[EventSeries]:
    """M independent realizations; realization m uses substream (seed, [replicate,] m)."""
    prefix: Tuple[int, ...] = () if replicate is None else (replicate,)

    def one(m: int) -> EventSeries:
        return sample_inhomogeneous(model, substream(config.seed, *prefix, m))

    if jobs > 1 and config.M > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(one, range(config.M)))
    return [one(m) for m in range(config.M)]
