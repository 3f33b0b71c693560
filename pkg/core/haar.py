"""
core/haar.py
────────────
Haar multiresolution analysis of event data on [0, T).

Bins     s^J_k = [Tk/2^J, T(k+1)/2^J), right-open
Scaling  φ_{j,k} = 2^(j/2)/√T · 1{s^j_k}
Detail   ψ_{j,k} = 2^(j/2)/√T · (1{s^(j+1)_2k} − 1{s^(j+1)_2k+1})

All transforms run on integer event counts; the 2^(j/2)/√T scaling is applied
only when coefficients are read out, so refinement and reconstruction
identities hold exactly.
"""

from __future__ import annotations

import json
import logging
import math
import os
import sys
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
from shared.config import MAX_LEVEL
from shared.errors import DomainError
from core.events import EventInput, EventSeries, as_collection

logger = logging.getLogger("Haar")


def _check_level(J: int, name: str = "J"):
    if not 0 <= J <= MAX_LEVEL:
        raise DomainError(f"level {name} must lie in [0, {MAX_LEVEL}], got {J}")


def _check_range(j0: int, J: int):
    _check_level(j0, "j0")
    _check_level(J)
    if j0 > J:
        raise DomainError(f"need j0 <= J, got j0={j0}, J={J}")


# ─── Counts ───────────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class DyadicCounts:
    """Event counts x^J_k over the 2^J dyadic bins of [0, T)."""

    J: int
    counts: np.ndarray
    T: float

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def coarsen(self, levels: int = 1) -> "DyadicCounts":
        """x^(J−1)_k = x^J_2k + x^J_2k+1, applied ``levels`` times."""
        if not 0 <= levels <= self.J:
            raise DomainError(f"cannot coarsen level {self.J} by {levels}")
        counts = self.counts
        for _ in range(levels):
            counts = counts[..., 0::2] + counts[..., 1::2]
        return DyadicCounts(self.J - levels, counts, self.T)


def _bin_index(times: np.ndarray, J: int, T: float) -> np.ndarray:
    n_bins = 1 << J
    idx = np.floor(times * (n_bins / T)).astype(np.int64)
    return np.clip(idx, 0, n_bins - 1)


def bin_counts(events: EventSeries, J: int) -> DyadicCounts:
    _check_level(J)
    idx = _bin_index(events.times, J, events.T)
    counts = np.bincount(idx, minlength=1 << J).astype(np.int64)
    return DyadicCounts(J, counts, events.T)


def bin_count_matrix(events: EventInput, J: int) -> np.ndarray:
    """M×2^J integer count matrix, one row per realization."""
    collection = as_collection(events)
    return np.vstack([bin_counts(s, J).counts for s in collection])


# ─── Piecewise-constant functions ─────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class PiecewiseConstantFn:
    """Σ_k values[k]·1{s^J_k}(t) on [0, T)."""

    J: int
    values: np.ndarray
    T: float

    def __call__(self, t):
        return evaluate(self, t)

    def sample(self, m: int) -> np.ndarray:
        """Values on the grid t_j = (j−1)T/m, j = 1..m."""
        if m < 1:
            raise DomainError(f"grid size must be >= 1, got {m}")
        grid = self.T * np.arange(m) / m
        return self.values[_bin_index(grid, self.J, self.T)]

    def to_frame(self) -> pd.DataFrame:
        n = self.values.size
        return pd.DataFrame({
            "k": np.arange(n),
            "start": self.T * np.arange(n) / n,
            "end": self.T * np.arange(1, n + 1) / n,
            "rate": self.values,
        })

    def to_csv(self, path: str) -> None:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format="%.17g")

    def to_json(self) -> Dict:
        return {"J": self.J, "T": self.T, "values": self.values.tolist()}


def evaluate(fn: PiecewiseConstantFn, t):
    arr = np.asarray(t, dtype=np.float64)
    if np.any(arr < 0.0) or np.any(arr >= fn.T) or np.any(~np.isfinite(arr)):
        raise DomainError(f"t must lie in [0, {fn.T})")
    out = fn.values[_bin_index(arr, fn.J, fn.T)]
    return float(out) if np.ndim(out) == 0 else out


def rate_from_counts(counts: np.ndarray, J: int, M: int, T: float) -> PiecewiseConstantFn:
    scale = 2 ** J / (M * T)
    return PiecewiseConstantFn(J, scale * np.asarray(counts, dtype=np.float64), T)


def linear_estimate(events: EventInput, J: int) -> PiecewiseConstantFn:
    """λ̂^J_k = 2^J/(MT)·Σ_m x^J_{m,k}; the mean of the M per-realization estimates."""
    collection = as_collection(events)
    X = bin_count_matrix(collection, J)
    return rate_from_counts(X.sum(axis=0), J, len(collection), collection[0].T)


# ─── Coefficients ─────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class HaarCoefficients:
    """α_{j0,k} and β_{j,k} for j0 ≤ j ≤ J−1, as real numbers."""

    j0: int
    J: int
    T: float
    alpha: np.ndarray
    beta: Tuple[np.ndarray, ...]

    def to_frame(self) -> pd.DataFrame:
        rows: List[Tuple[str, int, int, float]] = [
            ("alpha", self.j0, k, float(v)) for k, v in enumerate(self.alpha)
        ]
        for j, level in zip(range(self.j0, self.J), self.beta):
            rows.extend(("beta", j, k, float(v)) for k, v in enumerate(level))
        return pd.DataFrame(rows, columns=["kind", "level", "k", "value"])

    def to_csv(self, path: str) -> None:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format="%.17g")

    def to_json(self) -> Dict:
        return {
            "j0": self.j0, "J": self.J, "T": self.T,
            "alpha": self.alpha.tolist(),
            "beta": {str(j): b.tolist() for j, b in zip(range(self.j0, self.J), self.beta)},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def _scale(j: int, T: float) -> float:
    return 2 ** (j / 2) / math.sqrt(T)


def _forward(X: np.ndarray, j0: int, J: int) -> Tuple[np.ndarray, Tuple[np.ndarray, ...]]:
    """Integer Haar analysis: coarse sums at j0 and differences for j0..J−1."""
    sums = {J: X}
    for j in range(J - 1, j0 - 1, -1):
        sums[j] = sums[j + 1][..., 0::2] + sums[j + 1][..., 1::2]
    diffs = tuple(sums[j + 1][..., 0::2] - sums[j + 1][..., 1::2] for j in range(j0, J))
    return sums[j0], diffs


def inverse_counts(coarse: np.ndarray, diffs: Sequence[np.ndarray]) -> np.ndarray:
    """Invert ``_forward``: x_2k = (s + d)/2, x_2k+1 = (s − d)/2, level by level.

    Works on any (possibly partially zeroed) difference arrays; the result is
    float because a zeroed difference can leave half-counts.
    """
    x = np.asarray(coarse, dtype=np.float64)
    for d in diffs:
        d = np.asarray(d, dtype=np.float64)
        out = np.empty(x.shape[:-1] + (2 * x.shape[-1],))
        out[..., 0::2] = (x + d) * 0.5
        out[..., 1::2] = (x - d) * 0.5
        x = out
    return x


@dataclass(frozen=True, eq=False)
class HaarDecomposition:
    """Estimated α̂_{j0,k} and β̂_{j,k} (j0 ≤ j ≤ J−1) for M realizations.

    Stores the integer count-domain transform of the M×2^J count matrix;
    ``alpha``/``beta`` are the averages over realizations, ``beta_matrix``
    keeps the per-realization rows.
    """

    j0: int
    J: int
    T: float
    coarse: np.ndarray                  # M × 2^j0 integer sums
    diffs: Tuple[np.ndarray, ...]       # per level: M × 2^j integer differences

    @property
    def M(self) -> int:
        return int(self.coarse.shape[0])

    @property
    def alpha(self) -> np.ndarray:
        return _scale(self.j0, self.T) * self.coarse.sum(axis=0) / self.M

    @property
    def beta(self) -> Tuple[np.ndarray, ...]:
        return tuple(
            _scale(j, self.T) * d.sum(axis=0) / self.M
            for j, d in zip(range(self.j0, self.J), self.diffs)
        )

    def beta_matrix(self, j: int) -> np.ndarray:
        if not self.j0 <= j < self.J:
            raise DomainError(f"level {j} outside [{self.j0}, {self.J})")
        return _scale(j, self.T) * self.diffs[j - self.j0].astype(np.float64)

    def coefficients(self) -> HaarCoefficients:
        return HaarCoefficients(self.j0, self.J, self.T, self.alpha, self.beta)

    def reconstruct(self) -> PiecewiseConstantFn:
        """Inverse transform; equals ``linear_estimate(events, J)`` exactly."""
        counts = inverse_counts(
            self.coarse.sum(axis=0), [d.sum(axis=0) for d in self.diffs]
        )
        return rate_from_counts(counts, self.J, self.M, self.T)


def decompose_counts(X: np.ndarray, j0: int, J: int, T: float) -> HaarDecomposition:
    """Decomposition of an M×2^J integer count matrix."""
    _check_range(j0, J)
    X = np.atleast_2d(np.asarray(X, dtype=np.int64))
    if X.shape[1] != 1 << J:
        raise DomainError(f"count matrix has {X.shape[1]} columns, expected 2^{J}")
    coarse, diffs = _forward(X, j0, J)
    return HaarDecomposition(j0, J, T, coarse, diffs)


def decompose(events: EventInput, j0: int, J: int) -> HaarDecomposition:
    """Single binning pass at level J, then the integer analysis down to j0."""
    _check_range(j0, J)
    collection = as_collection(events)
    X = bin_count_matrix(collection, J)
    logger.debug("decompose j0=%d J=%d M=%d N=%d", j0, J, len(collection), int(X.sum()))
    return decompose_counts(X, j0, J, collection[0].T)
