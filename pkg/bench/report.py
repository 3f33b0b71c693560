"""
bench/report.py
───────────────
CSV / JSON output for bench runs.

  <stem>_r_rmise.csv    scenario × strategy R-RMISE table
  <stem>_rmise.csv      scenario × strategy "RMISE ([lo,hi])" table
  <stem>_long.csv       one row per (scenario, strategy)
  <stem>_curves.csv     mean reconstruction on the grid, per scenario
  <stem>_power.csv      size/power curves (λ0, rate, se)
  <stem>.json           everything above plus seed, git revision, runtime

CSV files carry no timing so identical runs produce identical bytes.
"""

import json
import logging
import os
import subprocess
import sys
from datetime import datetime
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
from shared.config import BASE_DIR
from bench.harness import RmiseReport, grid_points

logger = logging.getLogger("Bench")


def git_revision() -> str:
    try:
        out = subprocess.run(
            ["git", "rev-parse", "HEAD"], cwd=BASE_DIR, capture_output=True, text=True, timeout=5,
        )
        return out.stdout.strip() if out.returncode == 0 and out.stdout.strip() else "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def _format_ci(value: float, lo: float, hi: float) -> str:
    if np.isnan(value):
        return ""
    return f"{value:.0f} ([{lo:.0f},{hi:.0f}])"


def long_table(reports: Sequence[RmiseReport]) -> pd.DataFrame:
    return pd.DataFrame([row for r in reports for row in r.rows()])


def r_rmise_table(reports: Sequence[RmiseReport]) -> pd.DataFrame:
    """Rows = scenarios, columns = strategies (R-RMISE)."""
    frame = long_table(reports)
    if frame.empty:
        return frame
    table = frame.pivot(index="scenario", columns="strategy", values="r_rmise")
    order = list(dict.fromkeys(frame["strategy"]))
    return table.reindex(index=list(dict.fromkeys(frame["scenario"])), columns=order).round(4)


def rmise_ci_table(reports: Sequence[RmiseReport]) -> pd.DataFrame:
    """Rows = scenarios, cells "RMISE ([lo,hi])"."""
    rows = []
    for r in reports:
        row = {"scenario": r.scenario}
        for s in r.strategies:
            lo, hi = r.ci.get(s, (float("nan"), float("nan")))
            row[s] = _format_ci(r.rmise.get(s, float("nan")), lo, hi)
        rows.append(row)
    return pd.DataFrame(rows).set_index("scenario") if rows else pd.DataFrame()


def curves_table(reports: Sequence[RmiseReport]) -> pd.DataFrame:
    frames = []
    for r in reports:
        if r.truth is None:
            continue
        frame = pd.DataFrame({"scenario": r.scenario, "t": grid_points(r.m, r.T), "truth": r.truth})
        for s, curve in r.mean_curves.items():
            frame[s] = curve
        frames.append(frame)
    return pd.concat(frames, ignore_index=True) if frames else pd.DataFrame()


def _to_csv(frame: pd.DataFrame, path: str, index: bool = False) -> None:
    frame.to_csv(path, index=index, float_format="%.10g")
    logger.info("Wrote %s", path)


def write_reports(
    reports: Sequence[RmiseReport],
    out_dir: str,
    stem: str,
    metadata: Dict,
    power: Optional[List[pd.DataFrame]] = None,
) -> Dict[str, str]:
    """Write every table; returns {kind: path}."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {}
    if reports:
        paths["r_rmise"] = os.path.join(out_dir, f"{stem}_r_rmise.csv")
        _to_csv(r_rmise_table(reports), paths["r_rmise"], index=True)
        paths["rmise"] = os.path.join(out_dir, f"{stem}_rmise.csv")
        _to_csv(rmise_ci_table(reports), paths["rmise"], index=True)
        paths["long"] = os.path.join(out_dir, f"{stem}_long.csv")
        _to_csv(long_table(reports), paths["long"])
        curves = curves_table(reports)
        if not curves.empty:
            paths["curves"] = os.path.join(out_dir, f"{stem}_curves.csv")
            _to_csv(curves, paths["curves"])
    power_frame = pd.concat(power, ignore_index=True) if power else pd.DataFrame()
    if not power_frame.empty:
        paths["power"] = os.path.join(out_dir, f"{stem}_power.csv")
        _to_csv(power_frame, paths["power"])

    document = {
        **metadata,
        "git_revision": git_revision(),
        "written_at": datetime.now().isoformat(timespec="seconds"),
        "scenarios": [
            {
                "scenario": r.scenario, "n": r.n, "m": r.m, "skipped": r.skipped,
                "min_cell_mass": r.min_cell_mass, "empty_replicates": r.empty_replicates,
                "runtime": r.runtime, "digest": r.digest,
                "rmise": r.rmise, "r_rmise": r.r_rmise,
                "ci": {s: list(v) for s, v in r.ci.items()},
            }
            for r in reports
        ],
        "power": power_frame.to_dict(orient="records"),
    }
    paths["json"] = os.path.join(out_dir, f"{stem}.json")
    with open(paths["json"], "w") as f:
        json.dump(document, f, indent=2, default=float)
    logger.info("Wrote %s", paths["json"])
    return paths
