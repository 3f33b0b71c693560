"""
shared/schemas.py
─────────────────
Pydantic models for every JSON document the toolkit reads or writes:
intensity-model specs, bench scenario files and LRT verdicts.
"""

import json
import os
from typing import Annotated, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, model_validator

from shared.config import (
    DEFAULT_ALPHA, DEFAULT_BOUNDARY_POLICY, DEFAULT_J, DEFAULT_J0, DEFAULT_LRTG_INVERT, DEFAULT_OMEGA,
    DEFAULT_SEED, DESK_N, GRID_M, MIN_BIN_MASS, CURVE_POINTS, CURVE_LAMBDA0,
    BOOTSTRAP_B, MIN_BOOTSTRAP,
)


class _Spec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# ─── Intensity models ─────────────────────────────────────────────────────────

class ConstantSpec(_Spec):
    kind: Literal["constant"] = "constant"
    rate: float = Field(ge=0)
    T: float = Field(1.0, gt=0)


class TriangularSpec(_Spec):
    kind: Literal["triangular"] = "triangular"
    lambda0: float = Field(gt=0)
    xi: float = Field(gt=0, le=1)
    V: int = Field(ge=0)
    T: float = Field(1.0, gt=0)


class TriangleSineSpec(_Spec):
    """Triangular base plus sine perturbation.

    With ``A0`` set the benchmark rescaling A0 + A0 f/∫f on [0, 1) is applied
    and ``T`` must be 1.
    """
    kind: Literal["triangle-sine"] = "triangle-sine"
    lambda0: float = Field(1.0, gt=0)
    xi: float = Field(0.1, gt=0, le=1)
    V: int = Field(1, ge=0)
    nu: int = Field(3, ge=0)
    A: float = Field(0.05, ge=0)
    phase: float = 0.0
    T: float = Field(1.0, gt=0)
    A0: Optional[float] = Field(None, gt=0)


class BlocksSpec(_Spec):
    kind: Literal["blocks"] = "blocks"
    A0: float = Field(gt=0)


class BumpsSpec(_Spec):
    kind: Literal["bumps"] = "bumps"
    A0: float = Field(gt=0)


class PiecewiseLinearSpec(_Spec):
    kind: Literal["piecewise-linear"] = "piecewise-linear"
    knots: List[float]
    values: List[float]
    T: float = Field(1.0, gt=0)

    @model_validator(mode="after")
    def _same_length(self):
        if len(self.knots) != len(self.values) or len(self.knots) < 2:
            raise ValueError("knots and values need the same length (>= 2)")
        return self


ModelSpec = Annotated[
    Union[ConstantSpec, TriangularSpec, TriangleSineSpec, BlocksSpec, BumpsSpec, PiecewiseLinearSpec],
    Field(discriminator="kind"),
]


# ─── Bench scenarios ──────────────────────────────────────────────────────────

Strategy = Literal["linear", "dml", "lrt-local", "lrt-intermediate", "lrt-global"]
Policy = Literal["conservative", "max-likelihood", "intermediate"]


class ScenarioSpec(_Spec):
    name: str
    model: ModelSpec
    j0: int = Field(DEFAULT_J0, ge=0)
    J: int = Field(DEFAULT_J, ge=0, le=29)
    M: int = Field(1, ge=1)
    alpha: float = Field(DEFAULT_ALPHA, gt=0, lt=1)
    omega: float = Field(DEFAULT_OMEGA, ge=0)
    n: int = Field(DESK_N, ge=1)
    m: int = Field(GRID_M, ge=2)
    seed: int = DEFAULT_SEED
    policy: Policy = DEFAULT_BOUNDARY_POLICY
    lrtg_invert: bool = DEFAULT_LRTG_INVERT
    strategies: List[Strategy] = ["linear", "dml", "lrt-local", "lrt-intermediate", "lrt-global"]
    min_bin_mass: float = Field(MIN_BIN_MASS, ge=0)
    mass_policy: Literal["skip", "warn"] = "skip"

    @model_validator(mode="after")
    def _levels(self):
        if self.j0 > self.J:
            raise ValueError(f"j0={self.j0} exceeds J={self.J}")
        return self


class CurveSpec(_Spec):
    """Size/power sweep over lambda0 for the triangular model families."""
    name: str
    family: Literal["triangular", "triangle-sine"]
    test: Literal["homogeneity", "innovation"]
    levels: List[int]
    xi: float = Field(0.1, gt=0, le=1)
    V: int = Field(1, ge=0)
    nu: int = 3
    A: float = Field(0.05, ge=0)
    T: float = Field(1.0, gt=0)
    M: int = Field(1, ge=1)
    lambda0: Optional[List[float]] = None
    points: int = Field(CURVE_POINTS, ge=2)
    lambda0_range: List[float] = list(CURVE_LAMBDA0)
    alpha: float = Field(DEFAULT_ALPHA, gt=0, lt=1)
    policy: Policy = DEFAULT_BOUNDARY_POLICY
    n: int = Field(DESK_N, ge=1)
    seed: int = DEFAULT_SEED
    min_bin_mass: float = Field(MIN_BIN_MASS, ge=0)


class BenchFile(_Spec):
    scenarios: List[ScenarioSpec] = []
    curves: List[CurveSpec] = []
    bootstrap: int = Field(BOOTSTRAP_B, ge=MIN_BOOTSTRAP)


# ─── Verdicts ─────────────────────────────────────────────────────────────────

class VerdictRecord(_Spec):
    test: str
    level: Optional[int] = None
    R: float = Field(ge=0)
    dof: int = Field(ge=1)
    p: float = Field(ge=0, le=1)
    reject: bool
    boundary_count: int = Field(0, ge=0)
    policy: Optional[Policy] = None
    alpha: float


# ─── Export ───────────────────────────────────────────────────────────────────

def json_schemas() -> dict:
    """JSON Schema documents for the model, bench-file and verdict formats."""
    return {
        "model": TypeAdapter(ModelSpec).json_schema(),
        "bench": BenchFile.model_json_schema(),
        "verdict": VerdictRecord.model_json_schema(),
    }


def write_json_schemas(out_dir: str) -> List[str]:
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for name, schema in json_schemas().items():
        path = os.path.join(out_dir, f"{name}.schema.json")
        with open(path, "w") as f:
            json.dump(schema, f, indent=2, sort_keys=True)
        paths.append(path)
    return paths
