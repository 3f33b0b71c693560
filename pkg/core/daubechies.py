"""
core/daubechies.py
──────────────────
Daubechies D4 intensity estimation.

The process on [0, T) is mapped to [0, 3) with u = 3t/T, estimated there with
the D4 basis φ_{j,k}(u) = 2^(j/2) φ(2^j u − k), ψ_{j,k}(u) = 2^(j/2) ψ(2^j u − k),
and mapped back as λ̂(t) = (3/T)·λ̂_u(3t/T).

  φ, ψ        sampled exactly at dyadic points of spacing 2^-r by the cascade
              recursion, linearly interpolated in between
  α̂, β̂       Σ_τ φ_{j,k}(u_τ), Σ_τ ψ_{j,k}(u_τ)
  σ̂²          Σ_τ ψ²_{L,k}(u_τ)
  interior    ψ_{L,k} with support inside [0, 3]: k = 1..3·2^L − 2

Only interior detail coefficients are tested; boundary ones are always kept.
"""

from __future__ import annotations

import logging
import math
import os
import sys
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd
import pywt
from scipy.special import ndtri
from scipy.stats import norm

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
from shared.config import (
    CASCADE_DEPTH, MIN_CASCADE_DEPTH, DEFAULT_ALPHA, MAX_LEVEL,
)
from shared.errors import DomainError
from core.events import EventInput, as_collection
from core.lrt import LrtOutcome
from core.threshold import fdr_select

logger = logging.getLogger("D4")

SUPPORT_WIDTH = 3


# ─── Cascade ──────────────────────────────────────────────────────────────────

def d4_filter() -> np.ndarray:
    """Refinement coefficients c_k = √2·h_k, k = 0..3 (Σ c_k = 2)."""
    return math.sqrt(2.0) * np.asarray(pywt.Wavelet("db2").rec_lo, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class InterpolatedWavelet:
    """Samples on start + i·2^-r, linear in between, zero outside the support."""

    start: float
    depth: int
    values: np.ndarray

    @property
    def step(self) -> float:
        return 2.0 ** -self.depth

    @property
    def grid(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.values.size)

    @property
    def support(self) -> Tuple[float, float]:
        return self.start, self.start + self.step * (self.values.size - 1)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return np.interp(x, self.grid, self.values, left=0.0, right=0.0)

    def integral(self) -> float:
        """Trapezoid rule on the grid (end samples are zero)."""
        v = self.values
        return float(self.step * (v.sum() - 0.5 * (v[0] + v[-1])))


def _phi_levels(c: np.ndarray, depth: int) -> np.ndarray:
    """φ on i·2^-depth, i = 0..3·2^depth, exact up to rounding."""
    # integer values: eigenvector of [[c1, c0], [c3, c2]] for eigenvalue 1
    A = np.array([[c[1], c[0]], [c[3], c[2]]])
    w, v = np.linalg.eig(A)
    vec = np.real(v[:, np.argmin(np.abs(w - 1.0))])
    vec = vec / vec.sum()
    phi = np.array([0.0, vec[0], vec[1], 0.0])
    for n in range(1, depth + 1):
        half = 1 << (n - 1)
        size = SUPPORT_WIDTH * (1 << n) + 1
        nxt = np.zeros(size)
        for k, ck in enumerate(c):
            # φ(i/2^n) gets c_k·φ((i − k·2^(n−1))/2^(n−1))
            lo = k * half
            hi = min(size, lo + phi.size)
            nxt[lo:hi] += ck * phi[: hi - lo]
        phi = nxt
    return phi


@lru_cache(maxsize=8)
def cascade_d4(depth: int = CASCADE_DEPTH) -> Tuple[InterpolatedWavelet, InterpolatedWavelet]:
    """(φ on [0, 3], ψ on [−1, 2]) at grid spacing 2^-depth."""
    if depth < MIN_CASCADE_DEPTH:
        raise DomainError(f"cascade depth must be >= {MIN_CASCADE_DEPTH}, got {depth}")
    c = d4_filter()
    phi_fine = _phi_levels(c, depth)
    phi_half = _phi_levels(c, depth - 1)      # φ at spacing 2^-(depth−1) for ψ(x) = Σ d_k φ(2x − k)
    phi_fine.setflags(write=False)

    # d_k for k = −2..1: (c3, −c2, c1, −c0)
    d = {-2: c[3], -1: -c[2], 0: c[1], 1: -c[0]}
    size = SUPPORT_WIDTH * (1 << depth) + 1
    psi = np.zeros(size)
    i = np.arange(size)
    half = 1 << (depth - 1)
    for k, dk in d.items():
        # x = −1 + i/2^depth, 2x − k = (i − (2 + k)·2^(depth−1)) / 2^(depth−1)
        idx = i - (2 + k) * half
        ok = (idx >= 0) & (idx < phi_half.size)
        psi[ok] += dk * phi_half[idx[ok]]
    psi.setflags(write=False)
    logger.debug("cascade depth=%d: %d samples", depth, size)
    return InterpolatedWavelet(0.0, depth, phi_fine), InterpolatedWavelet(-1.0, depth, psi)


def two_scale_residual(depth: int) -> float:
    """max |φ(x) − Σ c_k φ(2x − k)| at the midpoints of the depth-``depth`` grid."""
    phi, _ = cascade_d4(depth)
    c = d4_filter()
    x = phi.grid[:-1] + 0.5 * phi.step
    rhs = sum(ck * phi(2.0 * x - k) for k, ck in enumerate(c))
    return float(np.max(np.abs(phi(x) - rhs)))


def wavelet_table(depth: int = CASCADE_DEPTH) -> pd.DataFrame:
    phi, psi = cascade_d4(depth)
    return pd.concat([
        pd.DataFrame({"function": "phi", "x": phi.grid, "value": phi.values}),
        pd.DataFrame({"function": "psi", "x": psi.grid, "value": psi.values}),
    ], ignore_index=True)


def write_wavelet_table(path: str, depth: int = CASCADE_DEPTH) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    wavelet_table(depth).to_csv(path, index=False, float_format="%.17g")


# ─── Index sets ───────────────────────────────────────────────────────────────

def scaling_indices(j: int) -> np.ndarray:
    """k = −2 .. 3·2^j − 1."""
    return np.arange(-2, SUPPORT_WIDTH * (1 << j))


def detail_indices(L: int) -> np.ndarray:
    """Every ψ_{L,k} whose support meets (0, 3): k = −1 .. 3·2^L."""
    return np.arange(-1, SUPPORT_WIDTH * (1 << L) + 1)


def interior_mask(L: int) -> np.ndarray:
    k = detail_indices(L)
    return (k >= 1) & (k <= SUPPORT_WIDTH * (1 << L) - 2)


def _accumulate(wavelet: InterpolatedWavelet, u: np.ndarray, j: int, ks: np.ndarray, power: int = 1) -> np.ndarray:
    """Σ_τ w_{j,k}(u_τ)^power for every k in ``ks`` (contiguous)."""
    out = np.zeros(ks.size)
    if u.size == 0:
        return out
    lo, hi = wavelet.support
    x = (1 << j) * u
    base = np.floor(x - lo).astype(np.int64)
    scale = 2.0 ** (j / 2)
    for offset in range(int(hi - lo) + 1):
        k = base - offset
        val = scale * wavelet(x - k)
        ok = (k >= ks[0]) & (k <= ks[-1]) & (val != 0.0)
        np.add.at(out, k[ok] - ks[0], val[ok] ** power)
    return out


# ─── Decomposition / estimation ───────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class D4Decomposition:
    """Per-realization α̂_{j0,k}, β̂_{L,k}, σ̂²_{L,k} on the [0, 3)-rescaled process."""

    j0: int
    J: int
    T: float
    depth: int
    alpha_rows: np.ndarray                 # M × |scaling_indices(j0)|
    beta_rows: Dict[int, np.ndarray]       # L → M × |detail_indices(L)|
    var_rows: Dict[int, np.ndarray]

    @property
    def M(self) -> int:
        return int(self.alpha_rows.shape[0])

    @property
    def alpha(self) -> np.ndarray:
        return self.alpha_rows.mean(axis=0)

    @property
    def beta(self) -> Dict[int, np.ndarray]:
        return {L: b.mean(axis=0) for L, b in self.beta_rows.items()}

    @property
    def variance(self) -> Dict[int, np.ndarray]:
        return {L: v.mean(axis=0) for L, v in self.var_rows.items()}

    def reconstruct(self, keep: Optional[Dict[int, np.ndarray]] = None) -> "D4Estimate":
        beta = self.beta
        if keep is not None:
            beta = {L: np.where(keep[L], b, 0.0) for L, b in beta.items()}
        return D4Estimate(self.j0, self.T, self.depth, self.alpha, beta)

    def to_frame(self) -> pd.DataFrame:
        frames = [pd.DataFrame({
            "kind": "alpha", "level": self.j0, "k": scaling_indices(self.j0),
            "value": self.alpha, "variance": np.nan, "interior": True,
        })]
        for L, b in self.beta.items():
            frames.append(pd.DataFrame({
                "kind": "beta", "level": L, "k": detail_indices(L), "value": b,
                "variance": self.variance[L], "interior": interior_mask(L),
            }))
        return pd.concat(frames, ignore_index=True)


@dataclass(frozen=True, eq=False)
class D4Estimate:
    """λ̂(t) = (3/T)·[Σ α̂ φ_{j0,k} + Σ θ̂ ψ_{L,k}](3t/T) on [0, T)."""

    j0: int
    T: float
    depth: int
    alpha: np.ndarray
    beta: Dict[int, np.ndarray]

    def _evaluate(self, t: np.ndarray) -> np.ndarray:
        phi, psi = cascade_d4(self.depth)
        u = SUPPORT_WIDTH * t / self.T
        total = np.zeros(u.shape)
        for wavelet, j, ks, coef in [(phi, self.j0, scaling_indices(self.j0), self.alpha)] + [
            (psi, L, detail_indices(L), b) for L, b in sorted(self.beta.items())
        ]:
            nz = coef != 0.0
            if not nz.any():
                continue
            arg = (1 << j) * u[:, None] - ks[nz][None, :]
            total += 2.0 ** (j / 2) * wavelet(arg) @ coef[nz]
        return SUPPORT_WIDTH / self.T * total

    def __call__(self, t):
        arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
        if np.any(arr < 0.0) or np.any(arr >= self.T) or np.any(~np.isfinite(arr)):
            raise DomainError(f"t must lie in [0, {self.T})")
        out = self._evaluate(arr)
        return float(out[0]) if np.ndim(t) == 0 else out

    def sample(self, m: int) -> np.ndarray:
        """Values on the grid t_j = (j−1)T/m."""
        if m < 1:
            raise DomainError(f"grid size must be >= 1, got {m}")
        return self._evaluate(self.T * np.arange(m) / m)

    def to_frame(self, m: int) -> pd.DataFrame:
        return pd.DataFrame({"t": self.T * np.arange(m) / m, "rate": self.sample(m)})

    def to_csv(self, path: str, m: int) -> None:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        self.to_frame(m).to_csv(path, index=False, float_format="%.17g")


def d4_decompose(events: EventInput, j0: int, J: int, depth: int = CASCADE_DEPTH) -> D4Decomposition:
    """α̂ at j0 and β̂, σ̂² for L = j0..J−1, per realization."""
    if not 0 <= j0 <= J <= MAX_LEVEL:
        raise DomainError(f"need 0 <= j0 <= J <= {MAX_LEVEL}, got j0={j0}, J={J}")
    collection = as_collection(events)
    T = collection[0].T
    phi, psi = cascade_d4(depth)
    alpha_rows, beta_rows, var_rows = [], {L: [] for L in range(j0, J)}, {L: [] for L in range(j0, J)}
    for series in collection:
        u = SUPPORT_WIDTH * series.times / T
        alpha_rows.append(_accumulate(phi, u, j0, scaling_indices(j0)))
        for L in range(j0, J):
            ks = detail_indices(L)
            beta_rows[L].append(_accumulate(psi, u, L, ks))
            var_rows[L].append(_accumulate(psi, u, L, ks, power=2))
    return D4Decomposition(
        j0, J, T, depth, np.vstack(alpha_rows),
        {L: np.vstack(r) for L, r in beta_rows.items()},
        {L: np.vstack(r) for L, r in var_rows.items()},
    )


def d4_linear_estimate(events: EventInput, J: int, depth: int = CASCADE_DEPTH) -> D4Estimate:
    """Projection estimator Σ_k α̂_{J,k} φ_{J,k}, rescaled back to [0, T)."""
    return d4_decompose(events, J, J, depth).reconstruct()


def d4_gaussian_pvalues(mean_beta: np.ndarray, mean_var: np.ndarray, M: int) -> np.ndarray:
    """Two-sided normal p-values of mean β̂ / √(mean σ̂² / M); σ̂² = 0 gives p = 1."""
    mean_beta = np.asarray(mean_beta, dtype=np.float64)
    mean_var = np.asarray(mean_var, dtype=np.float64)
    positive = mean_var > 0
    z = np.zeros_like(mean_beta)
    z[positive] = mean_beta[positive] / np.sqrt(mean_var[positive] / M)
    p = 2.0 * norm.sf(np.abs(z))
    p[~positive] = 1.0
    return p


def d4_gaussian_coeff_test(beta_hat, var_hat, M: int = 1, alpha: float = DEFAULT_ALPHA) -> LrtOutcome:
    """H: β_{L,k} = 0 via |mean β̂| > z_{1−α/2}·√(mean σ̂²/M); reported as R = z², dof = 1."""
    if M < 1:
        raise DomainError(f"M must be >= 1, got {M}")
    mean_beta = float(np.mean(beta_hat))
    mean_var = float(np.mean(var_hat))
    if mean_var <= 0:
        return LrtOutcome(R=0.0, dof=1, p_value=1.0, reject=False, alpha=alpha, test="d4-gaussian")
    z = mean_beta / math.sqrt(mean_var / M)
    critical = float(ndtri(1.0 - alpha / 2.0))
    return LrtOutcome(
        R=z * z, dof=1, p_value=float(2.0 * norm.sf(abs(z))), reject=abs(z) > critical,
        alpha=alpha, test="d4-gaussian",
    )


def d4_threshold_mask(decomposition: D4Decomposition, alpha: float = DEFAULT_ALPHA) -> Dict[int, np.ndarray]:
    """FDR selection over interior coefficients; boundary coefficients kept."""
    levels = sorted(decomposition.beta_rows)
    beta, var = decomposition.beta, decomposition.variance
    pvals = [d4_gaussian_pvalues(beta[L], var[L], decomposition.M)[interior_mask(L)] for L in levels]
    selected = fdr_select(np.concatenate(pvals) if pvals else np.empty(0), alpha)
    keep, start = {}, 0
    for L, p in zip(levels, pvals):
        mask = ~interior_mask(L)
        mask[interior_mask(L)] = selected[start:start + p.size]
        keep[L] = mask
        start += p.size
    return keep


def d4_estimate_nonlinear(
    events: EventInput, j0: int, J: int, alpha: float = DEFAULT_ALPHA, depth: int = CASCADE_DEPTH,
) -> D4Estimate:
    """Detail levels j0..J thresholded by FDR on the Gaussian-test p-values."""
    decomposition = d4_decompose(events, j0, J + 1, depth)
    keep = d4_threshold_mask(decomposition, alpha)
    logger.debug("d4 j0=%d J=%d kept %d/%d", j0, J,
                 sum(int(k.sum()) for k in keep.values()), sum(k.size for k in keep.values()))
    return decomposition.reconstruct(keep)
