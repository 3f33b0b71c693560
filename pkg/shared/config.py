
import os

# Base Directory (Project Root)
BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DATA_DIR = os.path.join(BASE_DIR, "data")
SCENARIOS_DIR = os.path.join(BASE_DIR, "scenarios")

# ─── Output Locations ─────────────────────────────────────────────────────────
RUNS_DIR      = os.path.join(DATA_DIR, "runs")          # CLI sidecars land here
BENCH_OUT_DIR = os.path.join(DATA_DIR, "bench")
BENCH_DB_PATH = os.path.join(DATA_DIR, "bench_results.db")

# ─── Statistical Defaults (headline configuration) ────────────────────────────
DEFAULT_ALPHA           = 0.05
DEFAULT_OMEGA           = 3.0
DEFAULT_J0              = 3
DEFAULT_J               = 7
DEFAULT_BOUNDARY_POLICY = "conservative"   # conservative | max-likelihood | intermediate
DEFAULT_LRTG_INVERT     = True             # lrt-global keeps the Holm-rejected levels

# ─── Numerics ─────────────────────────────────────────────────────────────────
QUAD_RTOL         = 1e-10
QUAD_LIMIT        = 500
MAX_LEVEL         = 30      # 2^(J+1) bins must fit in memory
CASCADE_DEPTH     = 12      # D4 interpolation grid spacing 2^-12
MIN_CASCADE_DEPTH = 6
LAMBDA_MAX_GRID   = 1 << 16
LAMBDA_MAX_SAFETY = 1e-6

# ─── Monte Carlo / Bench ──────────────────────────────────────────────────────
DEFAULT_SEED   = 20190601
DESK_N         = 1000
FULL_SCALE_N   = 10000
GRID_M         = 1000
BOOTSTRAP_B    = 2000
MIN_BOOTSTRAP  = 1000
CI_LEVEL       = 0.95
MIN_BIN_MASS   = 100.0
CURVE_POINTS   = 10
CURVE_LAMBDA0  = (1000.0, 50000.0)

# ─── Logging ──────────────────────────────────────────────────────────────────
LOG_FORMAT = "%(asctime)s [%(name)s] %(levelname)s: %(message)s"
