"""
cli/commands.py
───────────────
Subcommand handlers. Each takes the parsed argparse namespace, does its work
through the library, and returns the resolved configuration that the entry
point writes to the run's sidecar file.
"""

import json
import logging
import os
import sys
import time
from typing import Dict, List

import pandas as pd

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
from shared.config import BENCH_OUT_DIR, FULL_SCALE_N, RUNS_DIR, SCENARIOS_DIR
from shared.errors import ConfigurationError
from shared.schemas import BenchFile, write_json_schemas
from core.events import (
    EventSeries, read_events, series_digest, write_events_csv, write_events_txt,
)
from core.haar import linear_estimate
from core.lrt import BoundaryPolicy, test_homogeneity, test_innovation
from core.models import load_model
from core.simulate import SimulationConfig, sample_many
from core.threshold import Strategy, estimate_nonlinear
from core.daubechies import d4_decompose, d4_estimate_nonlinear, d4_linear_estimate

logger = logging.getLogger("CLI")


def _events(args) -> List[EventSeries]:
    collection = read_events(args.events, args.T)
    logger.info("Read %d realization(s), %d events from %s",
                len(collection), sum(len(s) for s in collection), args.events)
    return collection


def _grid_frame(T: float, values, m: int) -> pd.DataFrame:
    return pd.DataFrame({"t": [T * j / m for j in range(m)], "rate": values})


def _write_frame(frame: pd.DataFrame, path: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.17g")
    logger.info("Wrote %s", path)


# ─── simulate ─────────────────────────────────────────────────────────────────

def cmd_simulate(args) -> Dict:
    model = load_model(args.model)
    config = SimulationConfig(seed=args.seed, M=args.M)
    collection = sample_many(model, config)
    out_dir = args.out or os.path.join(RUNS_DIR, "simulate")
    os.makedirs(out_dir, exist_ok=True)

    files = []
    if args.format == "csv":
        path = os.path.join(out_dir, "events.csv")
        write_events_csv(collection, path)
        files.append(path)
    else:
        for m, series in enumerate(collection):
            path = os.path.join(out_dir, f"events_{m:03d}.txt")
            write_events_txt(series, path)
            files.append(path)

    manifest = {
        "model": model.spec().model_dump(),
        "seed": config.seed,
        "M": config.M,
        "T": model.T,
        "counts": [len(s) for s in collection],
        "digest": series_digest(collection),
        "files": [os.path.basename(p) for p in files],
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2)
    logger.info("Simulated %d realization(s) of %s into %s", config.M, model.kind.value, out_dir)
    return {"model": manifest["model"], "seed": config.seed, "M": config.M,
            "format": args.format, "out": out_dir}


# ─── test ─────────────────────────────────────────────────────────────────────

def cmd_test(args) -> Dict:
    collection = _events(args)
    if args.test == "homogeneity":
        outcome = test_homogeneity(collection, args.level, args.alpha)
    else:
        outcome = test_innovation(collection, args.level, args.alpha, BoundaryPolicy(args.boundary_policy))
    print(outcome.to_record().model_dump_json(indent=2))
    return {"events": args.events, "test": args.test, "level": args.level,
            "alpha": args.alpha, "boundary_policy": args.boundary_policy}


# ─── estimate / threshold ─────────────────────────────────────────────────────

def cmd_estimate(args) -> Dict:
    collection = _events(args)
    T = collection[0].T
    if args.wavelet == "d4":
        values = d4_linear_estimate(collection, args.J).sample(args.grid)
    else:
        fn = linear_estimate(collection, args.J)
        values = fn.sample(args.grid)
        if args.bins:
            fn.to_csv(args.bins)
    out = args.out or os.path.join(RUNS_DIR, "estimate.csv")
    _write_frame(_grid_frame(T, values, args.grid), out)
    return {"events": args.events, "J": args.J, "wavelet": args.wavelet,
            "grid": args.grid, "out": out}


def cmd_threshold(args) -> Dict:
    collection = _events(args)
    T = collection[0].T
    strategy = Strategy(args.strategy)
    out = args.out or os.path.join(RUNS_DIR, "threshold.csv")
    if args.wavelet == "d4":
        if strategy is Strategy.LINEAR:
            estimate = d4_decompose(collection, args.j0, args.J + 1).reconstruct()
        elif strategy is Strategy.LRT_LOCAL:
            estimate = d4_estimate_nonlinear(collection, args.j0, args.J, args.alpha)
        else:
            raise ConfigurationError(f"--wavelet d4 supports strategies linear and lrt-local, not {strategy.value}")
        _write_frame(_grid_frame(T, estimate.sample(args.grid), args.grid), out)
    else:
        estimate = estimate_nonlinear(
            collection, args.j0, args.J, strategy, alpha=args.alpha, omega=args.omega,
            policy=BoundaryPolicy(args.boundary_policy), lrtg_invert=args.lrtg_invert,
        )
        _write_frame(_grid_frame(T, estimate.sample(args.grid), args.grid), out)
        mask_path = args.mask or os.path.splitext(out)[0] + "_mask.csv"
        estimate.mask.to_csv(mask_path)
        logger.info("Kept %d/%d detail coefficients (%s)",
                    estimate.mask.kept_count, estimate.mask.size, strategy.value)
    return {"events": args.events, "strategy": strategy.value, "j0": args.j0, "J": args.J,
            "alpha": args.alpha, "omega": args.omega, "boundary_policy": args.boundary_policy,
            "lrtg_invert": args.lrtg_invert, "wavelet": args.wavelet, "grid": args.grid, "out": out}


# ─── bench ────────────────────────────────────────────────────────────────────

def cmd_bench(args) -> Dict:
    from bench.database import BenchDatabase
    from bench.harness import run_table1, size_power_curve
    from bench.report import git_revision, write_reports

    path = args.scenarios or os.path.join(SCENARIOS_DIR, "table1.json")
    with open(path) as f:
        bench = BenchFile.model_validate(json.load(f))
    n = FULL_SCALE_N if args.full_scale else args.n
    bootstrap = args.bootstrap or bench.bootstrap

    started = time.perf_counter()
    reports = run_table1(bench.scenarios, n=n, jobs=args.jobs, bootstrap=bootstrap)
    curves = [size_power_curve(c, n=n, jobs=args.jobs) for c in bench.curves]
    runtime = time.perf_counter() - started

    stem = os.path.splitext(os.path.basename(path))[0]
    metadata = {
        "source": path, "n": n, "jobs": args.jobs, "bootstrap": bootstrap,
        "seeds": sorted({s.seed for s in bench.scenarios} | {c.seed for c in bench.curves}),
        "runtime": runtime,
    }
    paths = write_reports(reports, args.out or BENCH_OUT_DIR, stem, metadata, curves)

    if not args.no_db:
        db = BenchDatabase(args.db) if args.db else BenchDatabase()
        seed = metadata["seeds"][0] if metadata["seeds"] else None
        run_id = db.record_run(path, seed, n or 0, args.jobs, git_revision(), runtime,
                               bench.model_dump())
        db.add_reports(run_id, reports)
        for frame in curves:
            db.add_curve_points(run_id, frame)

    skipped = [r.scenario for r in reports if r.skipped]
    if skipped:
        logger.warning("Skipped scenario(s): %s", ", ".join(skipped))
    return {"scenarios": path, "n": n, "jobs": args.jobs, "bootstrap": bootstrap,
            "full_scale": args.full_scale, "outputs": paths}


def cmd_schemas(args) -> Dict:
    out_dir = args.out or os.path.join(RUNS_DIR, "schemas")
    paths = write_json_schemas(out_dir)
    for path in paths:
        logger.info("Wrote %s", path)
    return {"out": out_dir, "files": [os.path.basename(p) for p in paths]}
