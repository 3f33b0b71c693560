"""
core/threshold.py
─────────────────
Coefficient selection for the nonlinear Haar estimator.

    λ̂(t) = Σ_k α̂_{j0,k} φ_{j0,k}(t) + Σ_{L=j0..J} Σ_k θ̂_{L,k} ψ_{L,k}(t)

with θ̂ = mask ∘ β̂. The α̂ part is never thresholded. Detail levels j0..J are
built from counts at level J+1, so the full mask reproduces
``linear_estimate(events, J+1)`` exactly.

Strategies
  linear             keep everything
  dml                hard threshold |β̂| > ω·σ̂
  lrt-local          single-coefficient LRT p-values + FDR step-up
  lrt-intermediate   per level: peel off the largest coefficient while the
                     joint pairwise LRT rejects
  lrt-global         one pairwise LRT per level + Holm step-down; by default
                     the Holm-rejected levels are kept and the rest zeroed
"""

from __future__ import annotations

import logging
import math
import os
import sys
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
from shared.config import DEFAULT_ALPHA, DEFAULT_LRTG_INVERT, DEFAULT_OMEGA, MAX_LEVEL
from shared.errors import DomainError, EmptyDataError
from core.events import EventInput, as_collection
from core.haar import (
    HaarDecomposition, PiecewiseConstantFn, bin_count_matrix, decompose_counts,
    inverse_counts, rate_from_counts,
)
from core.lrt import (
    DEFAULT_POLICY, BoundaryPolicy, lrt_pairwise, pair_statistics,
    pairwise_outcome, pairwise_pvalues,
)

logger = logging.getLogger("Threshold")


class Strategy(str, Enum):
    LINEAR = "linear"
    DML = "dml"
    LRT_LOCAL = "lrt-local"
    LRT_INTERMEDIATE = "lrt-intermediate"
    LRT_GLOBAL = "lrt-global"


# ─── Data ─────────────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class CoefficientMatrix:
    """β̂^(m)_{L,k} for all M realizations at one level, with the pair counts behind it."""

    L: int
    entries: np.ndarray     # M × K_L
    left: np.ndarray        # M × K_L counts in s^(L+1)_2k
    right: np.ndarray       # M × K_L counts in s^(L+1)_2k+1
    T: float

    @property
    def K(self) -> int:
        return int(self.entries.shape[1])

    @property
    def index_set(self) -> np.ndarray:
        return np.arange(self.K)

    @property
    def M(self) -> int:
        return int(self.entries.shape[0])

    @property
    def column_means(self) -> np.ndarray:
        return self.entries.mean(axis=0)

    @property
    def pair_sums(self) -> np.ndarray:
        """Column sums interleaved as (left_0, right_0, left_1, …)."""
        S = np.empty(2 * self.K)
        S[0::2] = self.left.sum(axis=0)
        S[1::2] = self.right.sum(axis=0)
        return S

    def variance_estimates(self) -> np.ndarray:
        """Σ_τ ψ²_{L,k}(τ) = (2^L/T)(x_2k + x_2k+1), per realization."""
        return (2 ** self.L / self.T) * (self.left + self.right).astype(np.float64)


def coefficient_matrices(decomposition: HaarDecomposition, X: np.ndarray) -> List[CoefficientMatrix]:
    """One matrix per detail level of ``decomposition``; X is its level-J count matrix."""
    out = []
    counts = {decomposition.J: X}
    for j in range(decomposition.J - 1, decomposition.j0 - 1, -1):
        counts[j] = counts[j + 1][:, 0::2] + counts[j + 1][:, 1::2]
    for L in range(decomposition.j0, decomposition.J):
        fine = counts[L + 1]
        out.append(CoefficientMatrix(
            L=L, entries=decomposition.beta_matrix(L),
            left=fine[:, 0::2], right=fine[:, 1::2], T=decomposition.T,
        ))
    return out


@dataclass(frozen=True, eq=False)
class ThresholdMask:
    """Keep-flags per (L, k) for L = j0..J, plus the score each decision used."""

    j0: int
    J: int
    keep: Dict[int, np.ndarray]
    scores: Dict[int, np.ndarray] = field(default_factory=dict)

    @classmethod
    def full(cls, j0: int, J: int, widths: Optional[Mapping[int, int]] = None) -> "ThresholdMask":
        widths = widths or {L: 2 ** L for L in range(j0, J + 1)}
        return cls(j0, J, {L: np.ones(widths[L], dtype=bool) for L in range(j0, J + 1)})

    @property
    def kept_count(self) -> int:
        return int(sum(int(m.sum()) for m in self.keep.values()))

    @property
    def size(self) -> int:
        return int(sum(m.size for m in self.keep.values()))

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for L in range(self.j0, self.J + 1):
            score = self.scores.get(L)
            for k, kept in enumerate(self.keep[L]):
                rows.append((L, k, bool(kept), float("nan") if score is None else float(score[k])))
        return pd.DataFrame(rows, columns=["level", "k", "kept", "p_or_threshold"])

    def to_csv(self, path: str) -> None:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format="%.17g")


@dataclass(frozen=True, eq=False)
class NonlinearEstimate:
    """Masked inverse transform; ``fn`` is the level-(J+1) piecewise-constant estimate."""

    j0: int
    J: int
    T: float
    strategy: Strategy
    mask: ThresholdMask
    fn: PiecewiseConstantFn

    def __call__(self, t):
        return self.fn(t)

    def sample(self, m: int) -> np.ndarray:
        return self.fn.sample(m)

    def to_csv(self, path: str) -> None:
        self.fn.to_csv(path)


# ─── Strategies ───────────────────────────────────────────────────────────────

def dml_hard_threshold(matrices: Sequence[CoefficientMatrix], omega: float = DEFAULT_OMEGA) -> ThresholdMask:
    """Keep k ⇔ |mean_m β̂| > ω·√(mean_m σ̂²)/√M."""
    if omega < 0:
        raise DomainError(f"omega must be >= 0, got {omega}")
    keep, scores = {}, {}
    for B in matrices:
        threshold = omega * np.sqrt(B.variance_estimates().mean(axis=0)) / math.sqrt(B.M)
        keep[B.L] = np.abs(B.column_means) > threshold
        scores[B.L] = threshold
    return ThresholdMask(matrices[0].L, matrices[-1].L, keep, scores)


def fdr_select(p_values: np.ndarray, alpha: float = DEFAULT_ALPHA) -> np.ndarray:
    """Step-up selection at α_Q = α / Σ_{i≤Q} 1/i; keep p ≤ p_(i*)."""
    p = np.asarray(p_values, dtype=np.float64)
    Q = p.size
    if Q == 0:
        return np.zeros(0, dtype=bool)
    alpha_q = alpha / np.sum(1.0 / np.arange(1, Q + 1))
    ordered = p[np.argsort(p, kind="stable")]
    passed = np.flatnonzero(ordered <= np.arange(1, Q + 1) / Q * alpha_q)
    if passed.size == 0:
        return np.zeros(Q, dtype=bool)
    return p <= ordered[passed[-1]]


def fdr_local(p_values: Mapping[int, np.ndarray], alpha: float = DEFAULT_ALPHA) -> ThresholdMask:
    """FDR control over every (L, k) at once, p-values in (L, k) order."""
    levels = sorted(p_values)
    flat = np.concatenate([np.asarray(p_values[L], dtype=np.float64) for L in levels])
    selected = fdr_select(flat, alpha)
    keep, start = {}, 0
    for L in levels:
        n = len(p_values[L])
        keep[L] = selected[start:start + n]
        start += n
    return ThresholdMask(levels[0], levels[-1], keep, {L: np.asarray(p_values[L]) for L in levels})


def holm_global(
    level_p_values: Mapping[int, float],
    alpha: float = DEFAULT_ALPHA,
    invert: bool = False,
    widths: Optional[Mapping[int, int]] = None,
) -> ThresholdMask:
    """Holm step-down over one p-value per level.

    Rejected levels are zeroed and the others kept whole; ``invert`` keeps the
    rejected levels and zeroes the rest instead.
    """
    levels = sorted(level_p_values)
    Q = len(levels)
    p = np.array([level_p_values[L] for L in levels], dtype=np.float64)
    order = np.argsort(p, kind="stable")
    bounds = alpha / (Q + 1 - np.arange(1, Q + 1))
    above = np.flatnonzero(p[order] > bounds)
    i_m = above[0] if above.size else Q            # 0-based count of rejections
    rejected = np.zeros(Q, dtype=bool)
    rejected[order[:i_m]] = True
    widths = widths or {L: 2 ** L for L in levels}
    keep = {
        L: np.full(widths[L], bool(rejected[i]) if invert else not rejected[i])
        for i, L in enumerate(levels)
    }
    scores = {L: np.full(widths[L], p[i]) for i, L in enumerate(levels)}
    logger.debug("holm: p=%s rejected=%s invert=%s", p.round(6).tolist(), rejected.tolist(), invert)
    return ThresholdMask(levels[0], levels[-1], keep, scores)


def recursive_intermediate(
    matrices: Sequence[CoefficientMatrix],
    alpha: float = DEFAULT_ALPHA,
    policy: BoundaryPolicy = DEFAULT_POLICY,
) -> ThresholdMask:
    """Per level: while the joint pairwise LRT on the remaining pairs rejects,
    retain the remaining coefficient with the largest |mean β̂| (lowest k on ties).
    """
    policy = BoundaryPolicy(policy)
    keep, scores = {}, {}
    for B in matrices:
        contrib, zero = pair_statistics(B.pair_sums)
        remaining = np.ones(B.K, dtype=bool)
        retained = np.zeros(B.K, dtype=bool)
        magnitude = np.abs(B.column_means)
        last_p = np.ones(B.K)
        while remaining.any():
            out = pairwise_outcome(contrib[remaining], zero[remaining], alpha, policy)
            last_p[remaining] = out.p_value
            if not out.reject:
                break
            k = int(np.argmax(np.where(remaining, magnitude, -np.inf)))
            retained[k] = True
            remaining[k] = False
        keep[B.L] = retained
        scores[B.L] = last_p
    return ThresholdMask(matrices[0].L, matrices[-1].L, keep, scores)


def local_pvalues(matrices: Sequence[CoefficientMatrix]) -> Dict[int, np.ndarray]:
    return {B.L: pairwise_pvalues(B.pair_sums) for B in matrices}


def global_pvalues(
    matrices: Sequence[CoefficientMatrix],
    alpha: float = DEFAULT_ALPHA,
    policy: BoundaryPolicy = DEFAULT_POLICY,
) -> Dict[int, float]:
    """Level-wise innovation p-values; a level with no events carries p = 1."""
    out = {}
    for B in matrices:
        try:
            out[B.L] = lrt_pairwise(B.pair_sums, alpha, policy).p_value
        except EmptyDataError:
            out[B.L] = 1.0
    return out


# ─── Assembly ─────────────────────────────────────────────────────────────────

def _prepare(events: EventInput, j0: int, J: int):
    if not 0 <= j0 <= J or J + 1 > MAX_LEVEL:
        raise DomainError(f"need 0 <= j0 <= J < {MAX_LEVEL}, got j0={j0}, J={J}")
    collection = as_collection(events)
    X = bin_count_matrix(collection, J + 1)
    decomposition = decompose_counts(X, j0, J + 1, collection[0].T)
    return decomposition, coefficient_matrices(decomposition, X)


def threshold_mask(
    matrices: Sequence[CoefficientMatrix],
    strategy: Strategy,
    alpha: float = DEFAULT_ALPHA,
    omega: float = DEFAULT_OMEGA,
    policy: BoundaryPolicy = DEFAULT_POLICY,
    lrtg_invert: bool = DEFAULT_LRTG_INVERT,
) -> ThresholdMask:
    strategy = Strategy(strategy)
    j0, J = matrices[0].L, matrices[-1].L
    if strategy is Strategy.LINEAR:
        return ThresholdMask.full(j0, J)
    if strategy is Strategy.DML:
        return dml_hard_threshold(matrices, omega)
    if strategy is Strategy.LRT_LOCAL:
        return fdr_local(local_pvalues(matrices), alpha)
    if strategy is Strategy.LRT_INTERMEDIATE:
        return recursive_intermediate(matrices, alpha, policy)
    return holm_global(global_pvalues(matrices, alpha, policy), alpha, invert=lrtg_invert)


def reconstruct_masked(decomposition: HaarDecomposition, mask: ThresholdMask) -> PiecewiseConstantFn:
    """Inverse transform of the column-summed coefficients with unkept differences zeroed."""
    diffs = []
    for L, d in zip(range(decomposition.j0, decomposition.J), decomposition.diffs):
        diffs.append(np.where(mask.keep[L], d.sum(axis=0), 0))
    counts = inverse_counts(decomposition.coarse.sum(axis=0), diffs)
    return rate_from_counts(counts, decomposition.J, decomposition.M, decomposition.T)


def estimate_nonlinear(
    events: EventInput,
    j0: int,
    J: int,
    strategy: Strategy = Strategy.LINEAR,
    alpha: float = DEFAULT_ALPHA,
    omega: float = DEFAULT_OMEGA,
    policy: BoundaryPolicy = DEFAULT_POLICY,
    lrtg_invert: bool = DEFAULT_LRTG_INVERT,
) -> NonlinearEstimate:
    strategy = Strategy(strategy)
    decomposition, matrices = _prepare(events, j0, J)
    mask = threshold_mask(matrices, strategy, alpha, omega, policy, lrtg_invert)
    logger.debug("%s j0=%d J=%d kept %d/%d", strategy.value, j0, J, mask.kept_count, mask.size)
    return NonlinearEstimate(j0, J, decomposition.T, strategy, mask, reconstruct_masked(decomposition, mask))


def estimate_all(
    events: EventInput,
    j0: int,
    J: int,
    strategies: Sequence[Strategy],
    alpha: float = DEFAULT_ALPHA,
    omega: float = DEFAULT_OMEGA,
    policy: BoundaryPolicy = DEFAULT_POLICY,
    lrtg_invert: bool = DEFAULT_LRTG_INVERT,
) -> Dict[Strategy, NonlinearEstimate]:
    """Every strategy on one binning pass of the same events."""
    decomposition, matrices = _prepare(events, j0, J)
    out = {}
    for s in map(Strategy, strategies):
        mask = threshold_mask(matrices, s, alpha, omega, policy, lrtg_invert)
        out[s] = NonlinearEstimate(j0, J, decomposition.T, s, mask, reconstruct_masked(decomposition, mask))
    return out
