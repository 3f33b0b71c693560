"""
bench/harness.py
────────────────
Monte Carlo harness.

  run_scenario       all strategies on the same simulated events (common random
                     numbers), RMISE / R-RMISE with percentile-bootstrap CIs
  size_power_curve   rejection rate of the homogeneity / innovation LRT over a
                     λ0 sweep, with binomial standard errors

Replicate i always draws from substream (seed, i, m), and results are stored
by replicate index, so reports do not depend on the worker count.
"""

from __future__ import annotations

import hashlib
import logging
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import stats

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
from shared.config import BOOTSTRAP_B, CI_LEVEL, MIN_BOOTSTRAP
from shared.errors import DomainError, EmptyDataError
from shared.schemas import CurveSpec, ScenarioSpec
from core.events import series_digest
from core.lrt import BoundaryPolicy, test_homogeneity, test_innovation
from core.models import (
    IntensityModel, TriangleSineIntensity, TriangularIntensity,
    integrate_intensity, model_from_spec,
)
from core.simulate import SimulationConfig, sample_many
from core.threshold import Strategy, estimate_all

logger = logging.getLogger("Bench")


# ─── Error measures ───────────────────────────────────────────────────────────

def grid_points(m: int, T: float = 1.0) -> np.ndarray:
    """t_j = (j−1)T/m, j = 1..m."""
    if m < 2:
        raise DomainError(f"grid size m must be >= 2, got {m}")
    return T * np.arange(m) / m


def _as_rows(estimates, m: int) -> np.ndarray:
    if isinstance(estimates, np.ndarray):
        return np.atleast_2d(estimates).astype(np.float64)
    return np.vstack([e.sample(m) for e in estimates])


def _truth(truth: Union[IntensityModel, np.ndarray], m: int) -> np.ndarray:
    if isinstance(truth, IntensityModel):
        return truth.rate(grid_points(m, truth.T))
    return np.asarray(truth, dtype=np.float64)


def root_ise(estimates, truth, m: int) -> np.ndarray:
    """Per-estimate (1/m Σ_j (λ̂(t_j) − λ(t_j))²)^(1/2)."""
    rows = _as_rows(estimates, m)
    return np.sqrt(np.mean((rows - _truth(truth, m)) ** 2, axis=1))


def rmise(estimates, truth, m: int) -> float:
    """(1/n) Σ_i root-ISE_i over the grid t_j = (j−1)/m."""
    return float(np.mean(root_ise(estimates, truth, m)))


def bootstrap_ci(
    values: Sequence[float], B: int = BOOTSTRAP_B, level: float = CI_LEVEL, seed: int = 0,
) -> Tuple[float, float]:
    """Percentile bootstrap CI for the mean of ``values``."""
    if B < MIN_BOOTSTRAP:
        raise DomainError(f"need at least {MIN_BOOTSTRAP} bootstrap resamples, got {B}")
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise DomainError("bootstrap needs at least one value")
    if np.ptp(values) == 0.0:
        return float(values[0]), float(values[0])
    res = stats.bootstrap(
        (values,), np.mean, n_resamples=B, confidence_level=level,
        method="percentile", random_state=np.random.default_rng(seed),
    )
    return float(res.confidence_interval.low), float(res.confidence_interval.high)


# ─── Scenarios ────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class BenchScenario:
    spec: ScenarioSpec
    model: IntensityModel

    @classmethod
    def from_spec(cls, spec: ScenarioSpec, n: Optional[int] = None) -> "BenchScenario":
        if n is not None:
            spec = spec.model_copy(update={"n": n})
        return cls(spec, model_from_spec(spec.model))

    @property
    def name(self) -> str:
        return self.spec.name

    def min_cell_mass(self) -> float:
        """min_k M·μ^(J+1)_k, the expected count in the sparsest finest cell."""
        return min_cell_mass(self.model, self.spec.J + 1, self.spec.M)


def min_cell_mass(model: IntensityModel, level: int, M: int = 1) -> float:
    edges = model.T * np.arange((1 << level) + 1) / (1 << level)
    return M * min(integrate_intensity(model, a, b) for a, b in zip(edges[:-1], edges[1:]))


@dataclass
class RmiseReport:
    scenario: str
    strategies: List[str]
    n: int
    m: int
    T: float = 1.0
    rmise: Dict[str, float] = field(default_factory=dict)
    r_rmise: Dict[str, float] = field(default_factory=dict)
    ci: Dict[str, Tuple[float, float]] = field(default_factory=dict)
    mean_curves: Dict[str, np.ndarray] = field(default_factory=dict)
    truth: Optional[np.ndarray] = None
    digest: str = ""
    min_cell_mass: float = float("nan")
    empty_replicates: int = 0
    runtime: float = 0.0
    skipped: Optional[str] = None

    def rows(self) -> List[dict]:
        out = []
        for s in self.strategies:
            lo, hi = self.ci.get(s, (float("nan"), float("nan")))
            out.append({
                "scenario": self.scenario, "strategy": s, "n": self.n,
                "rmise": self.rmise.get(s, float("nan")),
                "r_rmise": self.r_rmise.get(s, float("nan")),
                "ci_low": lo, "ci_high": hi, "skipped": self.skipped or "",
            })
        return out


def _replicate(scenario: BenchScenario, i: int, grid_m: int, truth: np.ndarray):
    spec = scenario.spec
    events = sample_many(scenario.model, SimulationConfig(spec.seed, spec.M), replicate=i)
    estimates = estimate_all(
        events, spec.j0, spec.J, spec.strategies, alpha=spec.alpha, omega=spec.omega,
        policy=BoundaryPolicy(spec.policy), lrtg_invert=spec.lrtg_invert,
    )
    rows = np.vstack([estimates[Strategy(s)].sample(grid_m) for s in spec.strategies])
    errors = np.sqrt(np.mean((rows - truth) ** 2, axis=1))
    return errors, rows, series_digest(events)


def run_scenario(
    scenario: BenchScenario,
    jobs: int = 1,
    bootstrap: int = BOOTSTRAP_B,
) -> RmiseReport:
    """n replicates of every strategy on shared events; order fixed by replicate index."""
    spec = scenario.spec
    report = RmiseReport(spec.name, list(spec.strategies), spec.n, spec.m, scenario.model.T)
    report.min_cell_mass = scenario.min_cell_mass()
    if report.min_cell_mass < spec.min_bin_mass:
        msg = (f"min expected count per level-{spec.J + 1} cell is "
               f"{report.min_cell_mass:.1f} < {spec.min_bin_mass:g}")
        if spec.mass_policy == "skip":
            logger.warning("Scenario '%s' skipped: %s", spec.name, msg)
            report.skipped = msg
            return report
        logger.warning("Scenario '%s': %s (running anyway)", spec.name, msg)

    logger.info("Scenario '%s': n=%d, strategies=%s, jobs=%d", spec.name, spec.n, spec.strategies, jobs)
    started = time.perf_counter()
    truth = scenario.model.rate(grid_points(spec.m, scenario.model.T))
    errors = np.full((spec.n, len(spec.strategies)), np.nan)
    curve_sum = np.zeros((len(spec.strategies), spec.m))
    digest = hashlib.sha256()
    empty = 0

    def one(i: int):
        try:
            return _replicate(scenario, i, spec.m, truth)
        except EmptyDataError:
            return None

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        for i, result in enumerate(pool.map(one, range(spec.n))):
            if result is None:
                empty += 1
                continue
            errors[i], rows, replicate_digest = result
            curve_sum += rows
            digest.update(replicate_digest.encode())

    done = ~np.isnan(errors[:, 0])
    report.empty_replicates = empty
    report.digest = digest.hexdigest()
    report.truth = truth
    if not done.any():
        report.skipped = f"all {spec.n} replicates had no events"
        report.runtime = time.perf_counter() - started
        logger.warning("Scenario '%s' skipped: %s", spec.name, report.skipped)
        return report
    for col, s in enumerate(spec.strategies):
        report.rmise[s] = float(np.mean(errors[done, col]))
        report.ci[s] = bootstrap_ci(errors[done, col], B=bootstrap, seed=spec.seed)
        report.mean_curves[s] = curve_sum[col] / max(int(done.sum()), 1)
    baseline = report.rmise.get(Strategy.LINEAR.value)
    for s in spec.strategies:
        report.r_rmise[s] = report.rmise[s] / baseline if baseline else float("nan")
    report.runtime = time.perf_counter() - started
    logger.info("Scenario '%s' done in %.1fs: %s", spec.name, report.runtime,
                {s: round(v, 4) for s, v in report.r_rmise.items()})
    return report


def run_table1(
    scenarios: Sequence[ScenarioSpec],
    n: Optional[int] = None,
    jobs: int = 1,
    bootstrap: int = BOOTSTRAP_B,
) -> List[RmiseReport]:
    return [run_scenario(BenchScenario.from_spec(s, n), jobs, bootstrap) for s in scenarios]


# ─── Size / power curves ──────────────────────────────────────────────────────

def curve_lambdas(spec: CurveSpec) -> np.ndarray:
    if spec.lambda0:
        return np.asarray(spec.lambda0, dtype=np.float64)
    lo, hi = spec.lambda0_range
    return np.geomspace(lo, hi, spec.points)


def curve_model(spec: CurveSpec, lambda0: float) -> IntensityModel:
    if spec.family == "triangular":
        return TriangularIntensity(lambda0, spec.xi, spec.V, spec.T)
    return TriangleSineIntensity(lambda0=lambda0, xi=spec.xi, V=spec.V, T=spec.T, nu=spec.nu, A=spec.A)


def size_power_curve(spec: CurveSpec, n: Optional[int] = None, jobs: int = 1) -> pd.DataFrame:
    """Rows (level, λ0, rate, se, …); every level sees the same events per replicate."""
    n = n or spec.n
    policy = BoundaryPolicy(spec.policy)
    rows = []
    for lambda0 in curve_lambdas(spec):
        model = curve_model(spec, float(lambda0))

        def one(i: int) -> List[Optional[bool]]:
            events = sample_many(model, SimulationConfig(spec.seed, spec.M), replicate=i)
            out = []
            for level in spec.levels:
                try:
                    if spec.test == "homogeneity":
                        out.append(test_homogeneity(events, level, spec.alpha).reject)
                    else:
                        out.append(test_innovation(events, level, spec.alpha, policy).reject)
                except EmptyDataError:
                    out.append(None)
            return out

        with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
            outcomes = list(pool.map(one, range(n)))
        for col, level in enumerate(spec.levels):
            decided = [o[col] for o in outcomes if o[col] is not None]
            rate = float(np.mean(decided)) if decided else float("nan")
            cell_level = level if spec.test == "homogeneity" else level + 1
            mass = min_cell_mass(model, cell_level, spec.M)
            rows.append({
                "curve": spec.name, "test": spec.test, "level": level,
                "lambda0": float(lambda0), "rate": rate,
                "se": math.sqrt(rate * (1 - rate) / len(decided)) if decided else float("nan"),
                "n": len(decided), "empty": n - len(decided),
                "mass_ok": bool(mass >= spec.min_bin_mass),
            })
        logger.info("Curve '%s' λ0=%.0f: %s", spec.name, lambda0,
                    [round(r["rate"], 3) for r in rows[-len(spec.levels):]])
    frame = pd.DataFrame(rows)
    violated = frame.loc[~frame["mass_ok"]]
    if len(violated):
        logger.warning("Curve '%s': mass condition violated at %d point(s)", spec.name, len(violated))
    return frame
