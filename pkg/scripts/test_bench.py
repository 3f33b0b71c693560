"""Monte Carlo harness and reports — run from project root: pytest scripts/test_bench.py"""
import json
import math

import numpy as np
import pandas as pd
import pytest

from bench.harness import (
    BenchScenario, bootstrap_ci, curve_lambdas, grid_points, min_cell_mass, rmise, root_ise,
    run_scenario, run_table1, size_power_curve,
)
from bench.report import r_rmise_table, write_reports
from core.models import BlocksIntensity, ConstantIntensity
from shared.errors import DomainError, EmptyDataError
from shared.schemas import BenchFile, CurveSpec, ScenarioSpec


def _constant_scenario(**overrides):
    spec = dict(
        name="flat", model={"kind": "constant", "rate": 3200.0}, j0=1, J=4, n=24, m=64,
        seed=7, min_bin_mass=0.0,
    )
    spec.update(overrides)
    return ScenarioSpec.model_validate(spec)


# ─── Error measures ───────────────────────────────────────────────────────────

def test_grid():
    np.testing.assert_allclose(grid_points(4), [0.0, 0.25, 0.5, 0.75])
    with pytest.raises(DomainError):
        grid_points(1)


def test_rmise_identities():
    truth = ConstantIntensity(5.0)
    assert rmise(np.full((3, 10), 5.0), truth, 10) == 0.0
    assert rmise(np.full((3, 10), 7.5), truth, 10) == pytest.approx(2.5)
    assert rmise(np.full((1, 10), 2.0), np.zeros(10), 10) == pytest.approx(2.0)


def test_rmise_is_mean_of_roots():
    rows = np.array([[1.0, 1.0], [3.0, 3.0]])
    np.testing.assert_allclose(root_ise(rows, np.zeros(2), 2), [1.0, 3.0])
    assert rmise(rows, np.zeros(2), 2) == pytest.approx(2.0)


def test_bootstrap_constant_values():
    assert bootstrap_ci([4.2] * 50, B=1000) == (4.2, 4.2)


def test_bootstrap_needs_resamples():
    with pytest.raises(DomainError):
        bootstrap_ci([1.0, 2.0], B=999)


def test_bootstrap_brackets_mean():
    values = np.random.default_rng(0).normal(10.0, 1.0, 400)
    lo, hi = bootstrap_ci(values, B=2000, seed=1)
    assert lo < values.mean() < hi
    assert bootstrap_ci(values, B=2000, seed=1) == (lo, hi)


@pytest.mark.slow
def test_bootstrap_width_scales_with_n():
    rng = np.random.default_rng(2)
    widths = []
    for n in (250, 1000, 4000):
        lo, hi = bootstrap_ci(rng.exponential(1.0, n), B=2000, seed=3)
        widths.append(hi - lo)
    assert widths[0] / widths[1] == pytest.approx(2.0, rel=0.25)
    assert widths[1] / widths[2] == pytest.approx(2.0, rel=0.25)


# ─── Scenarios ────────────────────────────────────────────────────────────────

def test_min_cell_mass():
    assert min_cell_mass(ConstantIntensity(3200.0), 5, M=2) == pytest.approx(200.0)
    assert min_cell_mass(BlocksIntensity(A0=10000.0), 8) < 100.0


def test_run_scenario_linear_baseline():
    report = run_scenario(BenchScenario.from_spec(_constant_scenario()), bootstrap=1000)
    assert report.r_rmise["linear"] == 1.0
    assert set(report.rmise) == {"linear", "dml", "lrt-local", "lrt-intermediate", "lrt-global"}
    assert report.empty_replicates == 0 and report.skipped is None
    for s in report.strategies:
        lo, hi = report.ci[s]
        assert lo <= report.rmise[s] <= hi
    assert report.mean_curves["linear"].shape == (64,)


def test_run_scenario_independent_of_jobs():
    scenario = BenchScenario.from_spec(_constant_scenario())
    serial = run_scenario(scenario, jobs=1, bootstrap=1000)
    parallel = run_scenario(scenario, jobs=4, bootstrap=1000)
    assert serial.digest == parallel.digest
    assert serial.rmise == parallel.rmise
    assert serial.ci == parallel.ci


def test_mass_condition_skip_and_warn():
    skipped = run_scenario(BenchScenario.from_spec(_constant_scenario(min_bin_mass=1e6)), bootstrap=1000)
    assert skipped.skipped and not skipped.rmise
    warned = run_scenario(
        BenchScenario.from_spec(_constant_scenario(min_bin_mass=1e6, mass_policy="warn", n=4)),
        bootstrap=1000,
    )
    assert warned.skipped is None and warned.rmise


def test_all_empty_replicates_skipped(monkeypatch):
    import bench.harness as harness

    def no_events(scenario, i, grid_m, truth):
        raise EmptyDataError("no events observed")

    monkeypatch.setattr(harness, "_replicate", no_events)
    report = run_scenario(BenchScenario.from_spec(_constant_scenario(n=5)), jobs=2, bootstrap=1000)
    assert report.empty_replicates == 5
    assert report.skipped == "all 5 replicates had no events"
    assert not report.rmise and not report.ci
    assert report.rows()[0]["skipped"] == report.skipped


def test_near_zero_intensity_does_not_crash():
    spec = _constant_scenario(model={"kind": "constant", "rate": 1e-6}, n=4)
    report = run_scenario(BenchScenario.from_spec(spec), bootstrap=1000)
    assert report.skipped is None
    assert all(v < 1e-5 for v in report.rmise.values())


def test_run_table1_overrides_n():
    reports = run_table1([_constant_scenario(), _constant_scenario(name="flat-2")], n=6, bootstrap=1000)
    assert [r.n for r in reports] == [6, 6]


def test_reports_written(tmp_path):
    reports = run_table1([_constant_scenario(n=8)], bootstrap=1000)
    curve = pd.DataFrame([{"curve": "c", "test": "homogeneity", "level": 2, "lambda0": 1000.0,
                           "rate": 0.05, "se": 0.01, "n": 100, "empty": 0, "mass_ok": True}])
    paths = write_reports(reports, str(tmp_path), "t1", {"seed": 7}, [curve])
    assert set(paths) == {"r_rmise", "rmise", "long", "curves", "power", "json"}
    table = pd.read_csv(paths["r_rmise"], index_col=0)
    assert table.loc["flat", "linear"] == 1.0
    doc = json.loads(open(paths["json"]).read())
    assert doc["seed"] == 7 and doc["scenarios"][0]["scenario"] == "flat"
    assert "curves" not in doc and doc["power"][0]["rate"] == 0.05
    assert r_rmise_table(reports).shape == (1, 5)


def test_table1_file_parses():
    import os
    from shared.config import SCENARIOS_DIR
    for name in ("table1.json", "parameter_sweep.json", "power_curves.json"):
        with open(os.path.join(SCENARIOS_DIR, name)) as f:
            BenchFile.model_validate(json.load(f))


# ─── Size / power curves ──────────────────────────────────────────────────────

def test_curve_lambdas():
    spec = CurveSpec(name="c", family="triangular", test="homogeneity", levels=[2])
    grid = curve_lambdas(spec)
    assert grid.size == 10
    assert grid[0] == pytest.approx(1000.0) and grid[-1] == pytest.approx(50000.0)


def test_size_power_curve_shape():
    spec = CurveSpec(name="tri", family="triangular", test="homogeneity", levels=[2, 3],
                     lambda0=[4000.0], n=40, min_bin_mass=100.0)
    frame = size_power_curve(spec)
    assert list(frame["level"]) == [2, 3]
    assert set(frame.columns) >= {"lambda0", "rate", "se", "n", "mass_ok"}
    assert frame["n"].tolist() == [40, 40]


@pytest.mark.slow
def test_triangular_size_and_power():
    spec = CurveSpec(name="tri", family="triangular", test="homogeneity", levels=[2, 3],
                     lambda0=[1000.0, 10000.0, 50000.0], n=1000)
    frame = size_power_curve(spec, jobs=4)
    null = frame[frame["level"] == 2]["rate"]
    assert np.all(np.abs(null - 0.05) < 3 * math.sqrt(0.05 * 0.95 / 1000) + 0.005)
    power = frame[frame["level"] == 3]["rate"].to_numpy()
    assert power[-1] > 0.99
    assert np.all(np.diff(power) > -0.03)


@pytest.mark.slow
def test_triangle_sine_power_decreases_with_level():
    spec = CurveSpec(name="ts", family="triangle-sine", test="innovation", levels=[3, 5],
                     lambda0=[5000.0], n=1000)
    frame = size_power_curve(spec, jobs=4)
    rate = dict(zip(frame["level"], frame["rate"]))
    se = dict(zip(frame["level"], frame["se"]))
    assert rate[5] <= rate[3] + 3 * se[3]


@pytest.mark.slow
@pytest.mark.parametrize("test, level", [("innovation", 1), ("homogeneity", 2)])
def test_triangular_null_size(test, level):
    spec = CurveSpec(name="tri", family="triangular", test=test, levels=[level],
                     lambda0=[10000.0], n=2000)
    frame = size_power_curve(spec, jobs=4)
    assert 0.035 <= frame["rate"].iloc[0] <= 0.065
    assert frame["empty"].iloc[0] == 0


@pytest.mark.slow
def test_triangle_sine_power_grows_with_lambda0():
    spec = CurveSpec(name="ts", family="triangle-sine", test="innovation", levels=[3],
                     points=5, n=1000)
    frame = size_power_curve(spec, jobs=4)
    rate, se = frame["rate"].to_numpy(), frame["se"].to_numpy()
    assert np.all(np.diff(rate) >= -3 * np.maximum(se[:-1], se[1:]))
    assert rate[-1] > 0.95 and rate[0] < 0.3


# ─── Table 1 reproduction ─────────────────────────────────────────────────────

TABLE1_TARGETS = {
    ("Blocks", "dml"): 0.6455,
    ("Blocks", "lrt-local"): 0.6937,
    ("Blocks", "lrt-intermediate"): 0.6402,
    ("Blocks", "lrt-global"): 0.7701,
    ("Bumps", "lrt-intermediate"): 0.9659,
    ("TriangleSine", "lrt-global"): 0.6000,
}


@pytest.mark.slow
def test_table1_reproduced():
    import os
    from shared.config import SCENARIOS_DIR
    with open(os.path.join(SCENARIOS_DIR, "table1.json")) as f:
        bench_file = BenchFile.model_validate(json.load(f))
    reports = run_table1(bench_file.scenarios, n=1000, jobs=8, bootstrap=1000)
    table = r_rmise_table(reports)
    for (model, strategy), target in TABLE1_TARGETS.items():
        assert table.loc[model, strategy] == pytest.approx(target, abs=0.05), (model, strategy)
    # LRT-I or LRT-G at least matches DM-L, to 0.01
    for model in table.index:
        best = min(table.loc[model, "lrt-intermediate"], table.loc[model, "lrt-global"])
        assert best < table.loc[model, "dml"] + 0.01, model
