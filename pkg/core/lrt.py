"""
core/lrt.py
───────────
Likelihood-ratio tests on (scaled) Poisson counts.

  equal means   H0: μ_1 = … = μ_P                 R ~ χ²(P−1)
  pairwise      H0: μ_2i = μ_2i+1 for every pair   R ~ χ²(P), dof reduced at
                                                   the parameter boundary

Both statistics depend on the M×P data only through its column sums, so an
M-realization matrix and its collapsed 1×P form give identical results.
Convention: 0·log 0 = 0 (scipy.special.xlogy).
"""

from __future__ import annotations

import logging
import math
import os
import sys
from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.special import xlogy
from scipy.stats import chi2

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
from shared.config import DEFAULT_ALPHA, DEFAULT_BOUNDARY_POLICY, MAX_LEVEL
from shared.errors import DomainError, EmptyDataError
from shared.schemas import VerdictRecord
from core.events import EventInput
from core.haar import bin_count_matrix

logger = logging.getLogger("LRT")


class BoundaryPolicy(str, Enum):
    """Critical-value choice when Ū pair means sit on the boundary μ = 0."""

    CONSERVATIVE = "conservative"       # dof = P
    MAX_LIKELIHOOD = "max-likelihood"   # dof = P − Ū
    INTERMEDIATE = "intermediate"       # dof = P − ⌈Ū/2⌉

    def dof(self, P: int, U: int) -> int:
        if self is BoundaryPolicy.CONSERVATIVE:
            return P
        if self is BoundaryPolicy.MAX_LIKELIHOOD:
            return P - U
        return P - math.ceil(U / 2)


DEFAULT_POLICY = BoundaryPolicy(DEFAULT_BOUNDARY_POLICY)


@dataclass(frozen=True)
class LrtOutcome:
    R: float
    dof: int
    p_value: float
    reject: bool
    boundary_count: int = 0
    policy: Optional[BoundaryPolicy] = None
    alpha: float = DEFAULT_ALPHA
    test: str = "lrt"
    level: Optional[int] = None

    def to_record(self) -> VerdictRecord:
        return VerdictRecord(
            test=self.test, level=self.level, R=self.R, dof=self.dof, p=self.p_value,
            reject=self.reject, boundary_count=self.boundary_count,
            policy=None if self.policy is None else self.policy.value, alpha=self.alpha,
        )


# ─── Chi-square ───────────────────────────────────────────────────────────────

def _check_dof(dof) -> int:
    if int(dof) != dof or dof < 1:
        raise DomainError(f"degrees of freedom must be an integer >= 1, got {dof}")
    return int(dof)


def chi2_sf(x: float, dof: int) -> float:
    dof = _check_dof(dof)
    if not x >= 0:
        raise DomainError(f"chi-square argument must be >= 0, got {x}")
    return float(chi2.sf(x, dof))


def chi2_quantile(p: float, dof: int) -> float:
    dof = _check_dof(dof)
    if not 0.0 < p < 1.0:
        raise DomainError(f"probability must lie in (0, 1), got {p}")
    return float(chi2.ppf(p, dof))


@lru_cache(maxsize=4096)
def critical_value(alpha: float, dof: int) -> float:
    """Upper-α point of χ²(dof)."""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    return float(chi2.isf(alpha, _check_dof(dof)))


def _outcome(R: float, dof: int, alpha: float, **extra) -> LrtOutcome:
    R = max(float(R), 0.0)
    return LrtOutcome(
        R=R, dof=dof, p_value=chi2_sf(R, dof), reject=R > critical_value(alpha, dof),
        alpha=alpha, **extra,
    )


def _column_sums(X, delta: float = 1.0) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise DomainError(f"count data must be a vector or an M×P matrix, got shape {X.shape}")
    if np.any(X < 0) or not np.all(np.isfinite(X)):
        raise DomainError("count data must be finite and nonnegative")
    if not delta > 0:
        raise DomainError(f"scale delta must be positive, got {delta}")
    return X.sum(axis=0) / delta


# ─── Equal means / homogeneity ────────────────────────────────────────────────

def lrt_equal_means(X, delta: float = 1.0, alpha: float = DEFAULT_ALPHA) -> LrtOutcome:
    """R = 2M Σ μ̄_i log(μ̄_i/μ̄_c) with μ̄_i = column mean of X/δ; dof = P − 1."""
    n = _column_sums(X, delta)
    P = n.size
    if P < 2:
        raise DomainError("equal-means test needs at least two cells (vacuous test)")
    total = n.sum()
    if total <= 0:
        raise EmptyDataError("equal-means test is undefined on all-zero data")
    R = 2.0 * float(np.sum(xlogy(n, n / (total / P))))
    return _outcome(R, P - 1, alpha, boundary_count=int(np.sum(n == 0)), test="equal-means")


def max_equal_means_statistic(total: float, P: int) -> float:
    """Largest attainable R for column total ``total`` over P cells: 2·total·log P."""
    return 2.0 * total * math.log(P)


def test_homogeneity(events: EventInput, J: int, alpha: float = DEFAULT_ALPHA) -> LrtOutcome:
    """J-th level homogeneity: equal means of the 2^J bin counts."""
    if J == 0:
        raise DomainError("every process is level-0 homogeneous (vacuous test)")
    if not 1 <= J <= MAX_LEVEL:
        raise DomainError(f"level J must lie in [1, {MAX_LEVEL}], got {J}")
    X = bin_count_matrix(events, J)
    try:
        out = lrt_equal_means(X, 1.0, alpha)
    except EmptyDataError:
        raise EmptyDataError(f"homogeneity test at J={J}: no events observed") from None
    logger.debug("homogeneity J=%d R=%.6g p=%.4g", J, out.R, out.p_value)
    return replace(out, test="homogeneity", level=J)


# ─── Pairwise / innovation ────────────────────────────────────────────────────

def pair_statistics(S: np.ndarray):
    """Per-pair contributions to R and the zero-pair mask for column sums S (length 2P)."""
    S = np.asarray(S, dtype=np.float64)
    if S.size % 2:
        raise DomainError(f"pairwise test needs an even number of cells, got {S.size}")
    left, right = S[0::2], S[1::2]
    pair = 0.5 * (left + right)
    zero = pair == 0
    safe = np.where(zero, 1.0, pair)
    contrib = 2.0 * (xlogy(left, left / safe) + xlogy(right, right / safe))
    contrib[zero] = 0.0
    return np.maximum(contrib, 0.0), zero


def pairwise_outcome(
    contrib: np.ndarray, zero: np.ndarray, alpha: float, policy: BoundaryPolicy,
) -> LrtOutcome:
    """Joint pairwise outcome over an arbitrary subset of pairs."""
    P = int(contrib.size)
    U = int(np.sum(zero))
    if P == 0 or U == P:
        return LrtOutcome(R=0.0, dof=max(P, 1), p_value=1.0, reject=False,
                          boundary_count=U, policy=policy, alpha=alpha, test="pairwise")
    return _outcome(float(contrib.sum()), policy.dof(P, U), alpha,
                    boundary_count=U, policy=policy, test="pairwise")


def lrt_pairwise(
    X, alpha: float = DEFAULT_ALPHA, policy: BoundaryPolicy = DEFAULT_POLICY,
) -> LrtOutcome:
    """R = 2M Σ_i [μ̄_2i log(μ̄_2i/μ̄^pair_i) + μ̄_2i+1 log(μ̄_2i+1/μ̄^pair_i)]."""
    policy = BoundaryPolicy(policy)
    S = _column_sums(X)
    if S.sum() <= 0:
        raise EmptyDataError("pairwise test is undefined on all-zero data")
    contrib, zero = pair_statistics(S)
    return pairwise_outcome(contrib, zero, alpha, policy)


def test_innovation(
    events: EventInput, L: int, alpha: float = DEFAULT_ALPHA,
    policy: BoundaryPolicy = DEFAULT_POLICY,
) -> LrtOutcome:
    """L-th level innovation: pairwise test on the 2^(L+1) bin counts."""
    if not 0 <= L < MAX_LEVEL:
        raise DomainError(f"level L must lie in [0, {MAX_LEVEL}), got {L}")
    X = bin_count_matrix(events, L + 1)
    try:
        out = lrt_pairwise(X, alpha, policy)
    except EmptyDataError:
        raise EmptyDataError(f"innovation test at L={L}: no events observed") from None
    logger.debug("innovation L=%d R=%.6g dof=%d U=%d", L, out.R, out.dof, out.boundary_count)
    return replace(out, test="innovation", level=L)


def single_coefficient_innovation_test(
    x_left: float, x_right: float, alpha: float = DEFAULT_ALPHA,
) -> LrtOutcome:
    """Pairwise test with P = 1; an empty pair is kept at the null with p = 1."""
    if x_left < 0 or x_right < 0:
        raise DomainError("counts must be nonnegative")
    if x_left + x_right == 0:
        return LrtOutcome(R=0.0, dof=1, p_value=1.0, reject=False, boundary_count=1,
                          policy=BoundaryPolicy.CONSERVATIVE, alpha=alpha, test="coefficient")
    out = lrt_pairwise([x_left, x_right], alpha, BoundaryPolicy.CONSERVATIVE)
    return replace(out, test="coefficient")


def pairwise_pvalues(S: np.ndarray) -> np.ndarray:
    """Single-coefficient p-values for every pair of S at once (empty pairs → 1)."""
    contrib, zero = pair_statistics(S)
    p = chi2.sf(contrib, 1)
    p[zero] = 1.0
    return p


# not pytest tests
test_homogeneity.__test__ = False
test_innovation.__test__ = False
