"""
bench/database.py
─────────────────
SQLite ledger of bench runs, kept next to the CSV/JSON reports so results from
different revisions and parameter sets can be queried together.

Schema
  bench_runs     — one row per `bench` invocation (scenario file, seed, n, git revision)
  rmise_results  — per (run, scenario, strategy): RMISE, R-RMISE, bootstrap CI
  curve_points   — per (run, curve, level, λ0): rejection rate and its SE
"""

import json
import logging
import os
import sqlite3
import sys
from contextlib import closing, contextmanager
from typing import Dict, Iterator, List, Sequence

import pandas as pd

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
from shared.config import BENCH_DB_PATH
from bench.harness import RmiseReport

logger = logging.getLogger("BenchDB")


# ─── Helpers ──────────────────────────────────────────────────────────────────

@contextmanager
def _get_conn(db_path: str) -> Iterator[sqlite3.Connection]:
    """Yield a SQLite connection with row-factory set; commits on success, always closes."""
    os.makedirs(os.path.dirname(os.path.abspath(db_path)), exist_ok=True)
    conn = sqlite3.connect(db_path, check_same_thread=False)
    with closing(conn), conn:
        conn.row_factory = sqlite3.Row
        conn.execute("PRAGMA journal_mode=WAL")
        conn.execute("PRAGMA foreign_keys=ON")
        yield conn


# ─── Main Class ───────────────────────────────────────────────────────────────

class BenchDatabase:
    def __init__(self, db_path: str = BENCH_DB_PATH):
        self.db_path = db_path
        self._init_db()

    def _init_db(self):
        with _get_conn(self.db_path) as conn:
            conn.executescript("""
                CREATE TABLE IF NOT EXISTS bench_runs (
                    id            INTEGER PRIMARY KEY AUTOINCREMENT,
                    source        TEXT,
                    seed          INTEGER,
                    n             INTEGER,
                    jobs          INTEGER,
                    git_revision  TEXT,
                    runtime       REAL,
                    config        TEXT,
                    created_at    TEXT    DEFAULT (datetime('now','localtime'))
                );

                CREATE TABLE IF NOT EXISTS rmise_results (
                    id            INTEGER PRIMARY KEY AUTOINCREMENT,
                    run_id        INTEGER NOT NULL REFERENCES bench_runs(id) ON DELETE CASCADE,
                    scenario      TEXT    NOT NULL,
                    strategy      TEXT    NOT NULL,
                    n             INTEGER,
                    rmise         REAL,
                    r_rmise       REAL,
                    ci_low        REAL,
                    ci_high       REAL,
                    skipped       TEXT
                );

                CREATE TABLE IF NOT EXISTS curve_points (
                    id            INTEGER PRIMARY KEY AUTOINCREMENT,
                    run_id        INTEGER NOT NULL REFERENCES bench_runs(id) ON DELETE CASCADE,
                    curve         TEXT    NOT NULL,
                    test          TEXT    NOT NULL,
                    level         INTEGER NOT NULL,
                    lambda0       REAL    NOT NULL,
                    rate          REAL,
                    se            REAL,
                    n             INTEGER,
                    mass_ok       INTEGER
                );
            """)
        logger.debug("Bench ledger ready at: %s", self.db_path)

    # ── Writes ────────────────────────────────────────────────────────────────

    def record_run(self, source: str, seed: int, n: int, jobs: int,
                   git_revision: str, runtime: float, config: Dict) -> int:
        with _get_conn(self.db_path) as conn:
            cur = conn.execute("""
                INSERT INTO bench_runs (source, seed, n, jobs, git_revision, runtime, config)
                VALUES (?, ?, ?, ?, ?, ?, ?)
            """, (source, seed, n, jobs, git_revision, runtime, json.dumps(config, default=str)))
            run_id = cur.lastrowid
        logger.info("Recorded bench run #%d (%s)", run_id, source)
        return run_id

    def add_reports(self, run_id: int, reports: Sequence[RmiseReport]) -> int:
        rows = [
            (run_id, r["scenario"], r["strategy"], r["n"], r["rmise"], r["r_rmise"],
             r["ci_low"], r["ci_high"], r["skipped"] or None)
            for report in reports for r in report.rows()
        ]
        with _get_conn(self.db_path) as conn:
            conn.executemany("""
                INSERT INTO rmise_results
                    (run_id, scenario, strategy, n, rmise, r_rmise, ci_low, ci_high, skipped)
                VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)
            """, rows)
        return len(rows)

    def add_curve_points(self, run_id: int, frame: pd.DataFrame) -> int:
        rows = [
            (run_id, r.curve, r.test, int(r.level), float(r.lambda0), float(r.rate),
             float(r.se), int(r.n), int(bool(r.mass_ok)))
            for r in frame.itertuples(index=False)
        ]
        with _get_conn(self.db_path) as conn:
            conn.executemany("""
                INSERT INTO curve_points
                    (run_id, curve, test, level, lambda0, rate, se, n, mass_ok)
                VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)
            """, rows)
        return len(rows)

    # ── Reads ─────────────────────────────────────────────────────────────────

    def get_runs(self) -> List[dict]:
        with _get_conn(self.db_path) as conn:
            cur = conn.execute("SELECT * FROM bench_runs ORDER BY id ASC")
            return [dict(row) for row in cur.fetchall()]

    def get_results(self, run_id: int) -> List[dict]:
        with _get_conn(self.db_path) as conn:
            cur = conn.execute("""
                SELECT * FROM rmise_results WHERE run_id = ? ORDER BY id ASC
            """, (run_id,))
            return [dict(row) for row in cur.fetchall()]

    def get_curve_points(self, run_id: int) -> List[dict]:
        with _get_conn(self.db_path) as conn:
            cur = conn.execute("""
                SELECT * FROM curve_points WHERE run_id = ? ORDER BY id ASC
            """, (run_id,))
            return [dict(row) for row in cur.fetchall()]
