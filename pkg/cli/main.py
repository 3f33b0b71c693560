"""
cli/main.py
───────────
Command-line entry point: simulate, estimate, threshold, test, bench, schemas.

Exit codes
  0   success
  1   runtime failure (all-zero data, output I/O)
  2   usage or configuration error (bad flags, invalid model/scenario file,
      unreadable or malformed event file)

Every successful run writes its resolved configuration as JSON to --sidecar
(default data/runs/<command>.config.json).
"""

import argparse
import json
import logging
import os
import sys
from typing import List, Optional

from pydantic import ValidationError

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
from shared.config import (
    DEFAULT_ALPHA, DEFAULT_BOUNDARY_POLICY, DEFAULT_J, DEFAULT_J0, DEFAULT_LRTG_INVERT, DEFAULT_OMEGA,
    DEFAULT_SEED, DESK_N, GRID_M, LOG_FORMAT, RUNS_DIR,
)
from shared.errors import ConfigurationError, DomainError, MsppError
from cli import commands

logger = logging.getLogger("CLI")

STRATEGIES = ["linear", "dml", "lrt-local", "lrt-intermediate", "lrt-global"]
POLICIES = ["conservative", "max-likelihood", "intermediate"]


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--verbose", "-v", action="store_true", help="debug logging")
    p.add_argument("--sidecar", help="where to write the resolved config JSON")


def _add_events(p: argparse.ArgumentParser):
    p.add_argument("--events", required=True, help="event file (.txt one time per line, or .csv realization,time)")
    p.add_argument("--T", type=float, default=None, help="observation length when the file has no T header")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mspp", description="Wavelet multiresolution tools for Poisson processes")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw realizations of an intensity model")
    p.add_argument("--model", required=True, help="model spec: JSON file or inline JSON")
    p.add_argument("--M", type=int, default=1, help="number of realizations")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", choices=["txt", "csv"], default="txt")
    _add_common(p)
    p.set_defaults(func=commands.cmd_simulate)

    p = sub.add_parser("estimate", help="linear (projection) estimate at level J")
    _add_events(p)
    p.add_argument("--J", type=int, default=DEFAULT_J)
    p.add_argument("--wavelet", choices=["haar", "d4"], default="haar")
    p.add_argument("--grid", type=int, default=GRID_M, help="number of grid points in the output CSV")
    p.add_argument("--bins", help="also write the Haar piecewise-constant bins to this CSV")
    p.add_argument("--out", help="reconstruction CSV (t,rate)")
    _add_common(p)
    p.set_defaults(func=commands.cmd_estimate)

    p = sub.add_parser("threshold", help="nonlinear estimate with a thresholding strategy")
    _add_events(p)
    p.add_argument("--strategy", choices=STRATEGIES, default="lrt-local")
    p.add_argument("--j0", type=int, default=DEFAULT_J0)
    p.add_argument("--J", type=int, default=DEFAULT_J)
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--omega", type=float, default=DEFAULT_OMEGA, help="hard-threshold multiplier (dml)")
    p.add_argument("--boundary-policy", choices=POLICIES, default=DEFAULT_BOUNDARY_POLICY)
    p.add_argument("--lrtg-invert", action=argparse.BooleanOptionalAction, default=DEFAULT_LRTG_INVERT,
                   help="lrt-global keeps the Holm-rejected levels (--no-lrtg-invert zeroes them instead)")
    p.add_argument("--wavelet", choices=["haar", "d4"], default="haar")
    p.add_argument("--grid", type=int, default=GRID_M)
    p.add_argument("--out", help="reconstruction CSV (t,rate)")
    p.add_argument("--mask", help="kept-coefficient CSV (default <out>_mask.csv)")
    _add_common(p)
    p.set_defaults(func=commands.cmd_threshold)

    p = sub.add_parser("test", help="homogeneity or innovation LRT at one level")
    _add_events(p)
    p.add_argument("--test", choices=["homogeneity", "innovation"], required=True)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--boundary-policy", choices=POLICIES, default=DEFAULT_BOUNDARY_POLICY)
    _add_common(p)
    p.set_defaults(func=commands.cmd_test)

    p = sub.add_parser("bench", help="Monte Carlo RMISE tables and size/power curves")
    p.add_argument("--scenarios", help="scenario JSON (default scenarios/table1.json)")
    p.add_argument("--n", type=int, default=None, help=f"replicates per scenario (file value, else {DESK_N})")
    p.add_argument("--full-scale", action="store_true", help="override n with the full-scale replicate count")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--bootstrap", type=int, default=None, help="bootstrap resamples for the CIs")
    p.add_argument("--out", help="report directory")
    p.add_argument("--db", help="SQLite ledger path")
    p.add_argument("--no-db", action="store_true", help="do not record the run in the ledger")
    _add_common(p)
    p.set_defaults(func=commands.cmd_bench)

    p = sub.add_parser("schemas", help="write JSON Schemas for model, bench and verdict files")
    p.add_argument("--out", help="output directory")
    _add_common(p)
    p.set_defaults(func=commands.cmd_schemas)
    return parser


def write_sidecar(command: str, config: dict, path: Optional[str] = None) -> str:
    path = path or os.path.join(RUNS_DIR, f"{command}.config.json")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as f:
        json.dump({"command": command, **config}, f, indent=2, sort_keys=True, default=str)
    logger.debug("Sidecar written to %s", path)
    return path


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format=LOG_FORMAT, stream=sys.stderr,
    )
    try:
        config = args.func(args)
        write_sidecar(args.command, config, args.sidecar)
        return 0
    except (ConfigurationError, DomainError, ValidationError, json.JSONDecodeError) as e:
        logger.error("%s: %s", args.command, e)
        return 2
    except (MsppError, OSError) as e:
        logger.error("%s failed: %s", args.command, e)
        return 1


if __name__ == "__main__":
    sys.exit(main())
