"""
scripts/check_pipeline.py
Run a quick end-to-end check of every stage and save a JSON report.
Each stage records PASS/FAIL plus the numbers it looked at.
"""
import json
import os
import sys

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from shared.config import CASCADE_DEPTH, DEFAULT_SEED
from core.events import EventSeries

report = {}


def stage(name):
    def wrap(fn):
        try:
            detail = fn() or {}
            report[name] = {"status": "PASS", **detail}
        except Exception as e:
            report[name] = {"status": "FAIL", "error": f"{type(e).__name__}: {e}"}
        return fn
    return wrap


# 1. Models
@stage("models")
def _():
    from core.models import integrate_intensity, load_model, true_haar_projection
    tri = load_model({"kind": "triangular", "lambda0": 1000, "xi": 0.1, "V": 1})
    proj = true_haar_projection(tri, 3)
    assert np.allclose(proj, [975, 1025, 1025, 975, 975, 1025, 1025, 975]), proj
    blocks = load_model({"kind": "blocks", "A0": 1.0})
    return {"triangular_level3": proj.tolist(), "blocks_mass": round(integrate_intensity(blocks, 0.0, 1.0), 4)}


# 2. Simulation
@stage("simulate")
def _():
    from core.models import load_model
    from core.simulate import SimulationConfig, sample_many
    model = load_model({"kind": "constant", "rate": 2000})
    a = sample_many(model, SimulationConfig(seed=DEFAULT_SEED, M=4))
    b = sample_many(model, SimulationConfig(seed=DEFAULT_SEED, M=4))
    assert all(np.array_equal(x.times, y.times) for x, y in zip(a, b))
    return {"counts": [len(s) for s in a]}


# 3. Haar transform
@stage("haar")
def _():
    from core.haar import decompose, linear_estimate
    series = EventSeries(np.array([0.1, 0.2, 0.3, 0.6]), 1.0)
    fn = linear_estimate(series, 1)
    assert np.allclose(fn.values, [6.0, 2.0]), fn.values
    rebuilt = decompose(series, 0, 3).reconstruct()
    assert np.allclose(rebuilt.values, linear_estimate(series, 3).values)
    return {"level1": fn.values.tolist()}


# 4. Likelihood-ratio tests
@stage("lrt")
def _():
    from core.lrt import test_homogeneity
    out = test_homogeneity(EventSeries(np.array([0.1, 0.2, 0.3, 0.6]), 1.0), 1)
    assert abs(out.R - 1.0465) < 1e-3, out.R
    return {"R": round(out.R, 4), "p": round(out.p_value, 4)}


# 5. Thresholding
@stage("threshold")
def _():
    from core.models import load_model
    from core.simulate import SimulationConfig, sample_many
    from core.threshold import Strategy, estimate_nonlinear
    series = sample_many(load_model({"kind": "bumps", "A0": 5000}), SimulationConfig(seed=1, M=1))
    kept = {}
    for strategy in Strategy:
        est = estimate_nonlinear(series, 3, 6, strategy)
        kept[strategy.value] = est.mask.kept_count
    assert kept["linear"] == sum(2 ** L for L in range(3, 7))
    return {"kept": kept}


# 6. Daubechies cascade
@stage("daubechies")
def _():
    from core.daubechies import two_scale_residual
    residual = two_scale_residual(CASCADE_DEPTH)
    assert residual < 1e-2, residual
    return {"depth": CASCADE_DEPTH, "two_scale_residual": residual}


out = os.path.join(os.path.dirname(os.path.abspath(__file__)), "diag_report.json")
with open(out, "w") as f:
    json.dump(report, f, indent=2, default=float)

print("Report written to:", out)
print(json.dumps(report, indent=2, default=float))
failed = [k for k, v in report.items() if v["status"] != "PASS"]
sys.exit(1 if failed else 0)
