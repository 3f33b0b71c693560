"""
core/models.py
──────────────
Intensity functions λ(t) ≥ 0 on [0, T) used to simulate and benchmark.

  constant          λ(t) = rate
  triangular        2^V triangles of relative amplitude ξ around λ0
  triangle-sine     triangular + Aλ0·sin(2^(ν+1)πt/T + phase); optional A0 rescaling
  blocks / bumps    Donoho–Johnstone test functions, shifted and rescaled on [0, 1)
  piecewise-linear  user knots/values, linear interpolation

Every model is an immutable dataclass and can be rebuilt from its JSON spec
(shared.schemas.ModelSpec) through ``model_from_spec`` / ``load_model``.
"""

from __future__ import annotations

import json
import logging
import math
import os
import sys
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import ClassVar, Union

import numpy as np
from pydantic import TypeAdapter, ValidationError
from scipy import integrate

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
from shared.config import (
    QUAD_RTOL, QUAD_LIMIT, MAX_LEVEL, LAMBDA_MAX_GRID, LAMBDA_MAX_SAFETY,
)
from shared.errors import ConfigurationError, DomainError
from shared.schemas import (
    ModelSpec, ConstantSpec, TriangularSpec, TriangleSineSpec,
    BlocksSpec, BumpsSpec, PiecewiseLinearSpec,
)
from core.haar import HaarCoefficients

logger = logging.getLogger("Models")


class IntensityKind(str, Enum):
    CONSTANT = "constant"
    TRIANGULAR = "triangular"
    TRIANGLE_SINE = "triangle-sine"
    BLOCKS = "blocks"
    BUMPS = "bumps"
    PIECEWISE_LINEAR = "piecewise-linear"


# ─── Helpers ──────────────────────────────────────────────────────────────────

def _linear_mass(fn, a: float, b: float, knots: np.ndarray) -> float:
    """Exact integral of a continuous function that is linear between ``knots``."""
    inner = knots[(knots > a) & (knots < b)]
    x = np.concatenate(([a], inner, [b]))
    y = fn(x)
    return float(np.sum(np.diff(x) * (y[:-1] + y[1:]) * 0.5))


def _quad_mass(fn, a: float, b: float, knots: np.ndarray) -> float:
    inner = knots[(knots > a) & (knots < b)]
    value, _err = integrate.quad(
        lambda t: float(fn(np.asarray([t]))[0]), a, b,
        points=inner if inner.size else None,
        epsabs=0.0, epsrel=QUAD_RTOL, limit=QUAD_LIMIT,
    )
    return float(value)


def _grid_max(fn, T: float, knots: np.ndarray) -> float:
    grid = np.concatenate((np.linspace(0.0, T, LAMBDA_MAX_GRID, endpoint=False), knots))
    return float(np.max(fn(grid))) * (1.0 + LAMBDA_MAX_SAFETY)


# ─── Base Class ───────────────────────────────────────────────────────────────

class IntensityModel(ABC):
    """Evaluatable and integrable intensity on [0, T)."""

    kind: ClassVar[IntensityKind]
    T: float

    @abstractmethod
    def rate(self, t: np.ndarray) -> np.ndarray:
        """Vectorized λ(t); callers guarantee t ∈ [0, T]."""

    @property
    @abstractmethod
    def lambda_max(self) -> float:
        ...

    @abstractmethod
    def spec(self) -> ModelSpec:
        ...

    def breakpoints(self) -> np.ndarray:
        """Interior points where λ has a kink or a jump."""
        return np.empty(0)

    def mass(self, a: float, b: float) -> float:
        return _quad_mass(self.rate, a, b, self.breakpoints())

    def _check_positive_mass(self):
        if not self.mass(0.0, self.T) > 0.0:
            raise ConfigurationError(f"{self.kind.value}: ∫λ over [0, T) must be positive")


# ─── Models ───────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class ConstantIntensity(IntensityModel):
    kind: ClassVar[IntensityKind] = IntensityKind.CONSTANT

    value: float
    T: float = 1.0

    def __post_init__(self):
        if not self.T > 0:
            raise ConfigurationError(f"T must be positive, got {self.T}")
        if self.value < 0:
            raise ConfigurationError(f"constant rate must be >= 0, got {self.value}")

    def rate(self, t):
        return np.full(np.shape(t), float(self.value))

    @property
    def lambda_max(self) -> float:
        return float(self.value)

    def mass(self, a, b):
        return float(self.value) * (b - a)

    def spec(self):
        return ConstantSpec(rate=self.value, T=self.T)


@dataclass(frozen=True)
class TriangularIntensity(IntensityModel):
    """2^V triangles: rising on even sub-intervals of level V+1, falling on odd ones.

    Values lie in [λ0(2−ξ)/2, λ0(2+ξ)/2] and ∫λ = Tλ0 for every V.
    """

    kind: ClassVar[IntensityKind] = IntensityKind.TRIANGULAR

    lambda0: float
    xi: float
    V: int
    T: float = 1.0

    def __post_init__(self):
        if not self.T > 0:
            raise ConfigurationError(f"T must be positive, got {self.T}")
        if not self.lambda0 > 0:
            raise ConfigurationError(f"lambda0 must be positive, got {self.lambda0}")
        if not 0 < self.xi <= 1:
            raise ConfigurationError(f"xi must lie in (0, 1], got {self.xi}")
        if self.V < 0 or self.V + 1 > MAX_LEVEL:
            raise ConfigurationError(f"V out of range: {self.V}")

    @property
    def gradient(self) -> float:
        return 2 ** (self.V + 1) * self.xi * self.lambda0 / self.T

    def _triangle(self, t):
        t = np.asarray(t, dtype=np.float64)
        pieces = 2 ** (self.V + 1)
        i = np.minimum(np.floor(t * pieces / self.T), pieces - 1).astype(np.int64)
        odd = i % 2
        s = 1 - 2 * odd
        base = self.lambda0 * ((2.0 - self.xi) / 2.0 - s * odd * self.xi)
        return base + s * self.gradient * (t - i * self.T / pieces)

    def rate(self, t):
        return self._triangle(t)

    @property
    def lambda_max(self) -> float:
        return self.lambda0 * (2.0 + self.xi) / 2.0

    def breakpoints(self):
        pieces = 2 ** (self.V + 1)
        return self.T * np.arange(1, pieces) / pieces

    def mass(self, a, b):
        return _linear_mass(self._triangle, a, b, TriangularIntensity.breakpoints(self))

    def spec(self):
        return TriangularSpec(lambda0=self.lambda0, xi=self.xi, V=self.V, T=self.T)


@dataclass(frozen=True)
class TriangleSineIntensity(TriangularIntensity):
    """Triangular base plus a sine of period T/2^ν.

    With ``A0`` set (T = 1) the benchmark form A0 + A0·f/∫f is used, so the
    expected total count is 2·A0.
    """

    kind: ClassVar[IntensityKind] = IntensityKind.TRIANGLE_SINE

    lambda0: float = 1.0
    xi: float = 0.1
    V: int = 1
    T: float = 1.0
    nu: int = 3
    A: float = 0.05
    phase: float = 0.0
    A0: Union[float, None] = None
    _f_mass: float = field(init=False, repr=False, default=0.0)

    def __post_init__(self):
        super().__post_init__()
        if self.nu < self.V + 2:
            raise ConfigurationError(
                f"sine scale nu={self.nu} must be >= V+2={self.V + 2}"
            )
        if self.A < 0:
            raise ConfigurationError(f"sine magnitude A must be >= 0, got {self.A}")
        if self.A > (2.0 - self.xi) / 2.0:
            raise ConfigurationError(
                f"A={self.A} exceeds (2-xi)/2={(2.0 - self.xi) / 2.0}; intensity would go negative"
            )
        if self.A0 is not None:
            if self.T != 1.0:
                raise ConfigurationError("the A0 rescaling is defined on T = 1 only")
            if not self.A0 > 0:
                raise ConfigurationError(f"A0 must be positive, got {self.A0}")
        object.__setattr__(self, "_f_mass", self._raw_mass(0.0, self.T))

    @property
    def omega(self) -> float:
        return 2 ** (self.nu + 1) * math.pi / self.T

    def _raw(self, t):
        t = np.asarray(t, dtype=np.float64)
        return self._triangle(t) + self.A * self.lambda0 * np.sin(self.omega * t + self.phase)

    def _raw_mass(self, a, b):
        sine = -(self.A * self.lambda0 / self.omega) * (
            math.cos(self.omega * b + self.phase) - math.cos(self.omega * a + self.phase)
        )
        return _linear_mass(self._triangle, a, b, TriangularIntensity.breakpoints(self)) + sine

    def rate(self, t):
        if self.A0 is None:
            return self._raw(t)
        return self.A0 + self.A0 * self._raw(t) / self._f_mass

    @property
    def lambda_max(self) -> float:
        raw_max = self.lambda0 * ((2.0 + self.xi) / 2.0 + self.A)
        if self.A0 is None:
            return raw_max
        return self.A0 + self.A0 * raw_max / self._f_mass

    def mass(self, a, b):
        if self.A0 is None:
            return self._raw_mass(a, b)
        return self.A0 * (b - a) + self.A0 * self._raw_mass(a, b) / self._f_mass

    def spec(self):
        return TriangleSineSpec(
            lambda0=self.lambda0, xi=self.xi, V=self.V, nu=self.nu, A=self.A,
            phase=self.phase, T=self.T, A0=self.A0,
        )


@dataclass(frozen=True)
class _DonohoIntensity(IntensityModel):
    """shift·A0 + scale·A0·f/∫f on [0, 1) for a Donoho–Johnstone test function f."""

    POSITIONS: ClassVar[np.ndarray] = np.array(
        [0.1, 0.13, 0.15, 0.23, 0.25, 0.40, 0.44, 0.65, 0.76, 0.78, 0.81]
    )
    SHIFT: ClassVar[float] = 1.75
    SCALE: ClassVar[float] = 0.25

    A0: float
    T: float = field(init=False, default=1.0)
    _f_mass: float = field(init=False, repr=False, default=0.0)
    _lambda_max: float = field(init=False, repr=False, default=0.0)

    def __post_init__(self):
        if not self.A0 > 0:
            raise ConfigurationError(f"A0 must be positive, got {self.A0}")
        f_mass = _quad_mass(self.shape, 0.0, 1.0, self.POSITIONS)
        object.__setattr__(self, "_f_mass", f_mass)
        object.__setattr__(self, "_lambda_max", _grid_max(self.rate, 1.0, self.POSITIONS))
        low = float(np.min(self.rate(np.concatenate((np.linspace(0, 1, LAMBDA_MAX_GRID), self.POSITIONS)))))
        if low < 0:
            raise ConfigurationError(f"{self.kind.value}: rescaled intensity is negative ({low})")
        logger.debug("%s A0=%g: ∫f=%.12g λmax=%.6g", self.kind.value, self.A0, f_mass, self._lambda_max)

    @staticmethod
    @abstractmethod
    def shape(t: np.ndarray) -> np.ndarray:
        ...

    def rate(self, t):
        return self.A0 * self.SHIFT + self.A0 * self.SCALE * self.shape(t) / self._f_mass

    @property
    def lambda_max(self) -> float:
        return self._lambda_max

    def breakpoints(self):
        return self.POSITIONS

    def mass(self, a, b):
        return self.A0 * self.SHIFT * (b - a) + self.A0 * self.SCALE * (
            _quad_mass(self.shape, a, b, self.POSITIONS) / self._f_mass
        )


@dataclass(frozen=True)
class BlocksIntensity(_DonohoIntensity):
    """Right-continuous step function: Σ h_j·1{t ≥ t_j}."""

    kind: ClassVar[IntensityKind] = IntensityKind.BLOCKS
    HEIGHTS: ClassVar[np.ndarray] = np.array(
        [4.0, -5.0, 3.0, -4.0, 5.0, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2]
    )

    @staticmethod
    def shape(t):
        t = np.asarray(t, dtype=np.float64)
        steps = t[..., None] >= BlocksIntensity.POSITIONS
        return steps @ BlocksIntensity.HEIGHTS

    def spec(self):
        return BlocksSpec(A0=self.A0)


@dataclass(frozen=True)
class BumpsIntensity(_DonohoIntensity):
    """Σ h_j·(1 + |t − t_j|/w_j)^-4."""

    kind: ClassVar[IntensityKind] = IntensityKind.BUMPS
    HEIGHTS: ClassVar[np.ndarray] = np.array(
        [4.0, 5.0, 3.0, 4.0, 5.0, 4.2, 2.1, 4.3, 3.1, 5.1, 4.2]
    )
    WIDTHS: ClassVar[np.ndarray] = np.array(
        [0.005, 0.005, 0.006, 0.01, 0.01, 0.03, 0.01, 0.01, 0.005, 0.008, 0.005]
    )

    @staticmethod
    def shape(t):
        t = np.asarray(t, dtype=np.float64)
        u = np.abs(t[..., None] - BumpsIntensity.POSITIONS) / BumpsIntensity.WIDTHS
        return (1.0 + u) ** -4 @ BumpsIntensity.HEIGHTS

    def spec(self):
        return BumpsSpec(A0=self.A0)


@dataclass(frozen=True)
class PiecewiseLinearIntensity(IntensityModel):
    """Continuous interpolation of (knots, values); knots span [0, T]."""

    kind: ClassVar[IntensityKind] = IntensityKind.PIECEWISE_LINEAR

    knots: tuple
    values: tuple
    T: float = 1.0

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        if knots.shape != values.shape or knots.size < 2:
            raise ConfigurationError("knots and values need the same length (>= 2)")
        if np.any(np.diff(knots) <= 0):
            raise ConfigurationError("knots must be strictly increasing")
        if knots[0] != 0.0 or knots[-1] != self.T:
            raise ConfigurationError(f"knots must start at 0 and end at T={self.T}")
        if np.any(values < 0):
            raise ConfigurationError("piecewise-linear values must be >= 0")
        object.__setattr__(self, "knots", tuple(float(k) for k in knots))
        object.__setattr__(self, "values", tuple(float(v) for v in values))
        self._check_positive_mass()

    def rate(self, t):
        return np.interp(np.asarray(t, dtype=np.float64), self.knots, self.values)

    @property
    def lambda_max(self) -> float:
        return max(self.values)

    def breakpoints(self):
        return np.asarray(self.knots[1:-1])

    def mass(self, a, b):
        return _linear_mass(self.rate, a, b, self.breakpoints())

    def spec(self):
        return PiecewiseLinearSpec(knots=list(self.knots), values=list(self.values), T=self.T)


# ─── Operations ───────────────────────────────────────────────────────────────

def eval_intensity(model: IntensityModel, t):
    """λ(t) for t ∈ [0, T); scalar in, float out."""
    arr = np.asarray(t, dtype=np.float64)
    if np.any(arr < 0.0) or np.any(arr >= model.T) or np.any(~np.isfinite(arr)):
        raise DomainError(f"t must lie in [0, {model.T})")
    out = model.rate(arr)
    return float(out) if out.ndim == 0 else out


def integrate_intensity(model: IntensityModel, a: float, b: float) -> float:
    if not 0.0 <= a <= b <= model.T:
        raise DomainError(f"invalid interval [{a}, {b}] for T={model.T}")
    if a == b:
        return 0.0
    return model.mass(float(a), float(b))


def _dyadic_masses(model: IntensityModel, J: int) -> np.ndarray:
    if not 0 <= J <= MAX_LEVEL:
        raise DomainError(f"level J must lie in [0, {MAX_LEVEL}], got {J}")
    edges = model.T * np.arange(2 ** J + 1) / 2 ** J
    return np.array([model.mass(a, b) for a, b in zip(edges[:-1], edges[1:])])


def true_haar_projection(model: IntensityModel, J: int) -> np.ndarray:
    """λ^J_k = (2^J/T)·μ^J_k, k = 0..2^J−1."""
    return _dyadic_masses(model, J) * (2 ** J / model.T)


def true_coefficients(model: IntensityModel, j0: int, J: int) -> HaarCoefficients:
    """⟨λ, φ_{j0,k}⟩ and ⟨λ, ψ_{j,k}⟩ for j0 ≤ j ≤ J−1 on the Haar basis of [0, T)."""
    if not 0 <= j0 <= J:
        raise DomainError(f"need 0 <= j0 <= J, got j0={j0}, J={J}")
    mu = _dyadic_masses(model, J)
    levels = {J: mu}
    for j in range(J - 1, j0 - 1, -1):
        levels[j] = levels[j + 1][0::2] + levels[j + 1][1::2]
    root_T = math.sqrt(model.T)
    alpha = 2 ** (j0 / 2) / root_T * levels[j0]
    beta = tuple(
        2 ** (j / 2) / root_T * (levels[j + 1][0::2] - levels[j + 1][1::2])
        for j in range(j0, J)
    )
    return HaarCoefficients(j0=j0, J=J, T=model.T, alpha=alpha, beta=beta)


# ─── Spec Loading ─────────────────────────────────────────────────────────────

_SPEC_ADAPTER = TypeAdapter(ModelSpec)


def model_from_spec(spec: ModelSpec) -> IntensityModel:
    if isinstance(spec, ConstantSpec):
        return ConstantIntensity(spec.rate, spec.T)
    if isinstance(spec, TriangleSineSpec):
        return TriangleSineIntensity(
            lambda0=spec.lambda0, xi=spec.xi, V=spec.V, T=spec.T, nu=spec.nu,
            A=spec.A, phase=spec.phase, A0=spec.A0,
        )
    if isinstance(spec, TriangularSpec):
        return TriangularIntensity(spec.lambda0, spec.xi, spec.V, spec.T)
    if isinstance(spec, BlocksSpec):
        return BlocksIntensity(spec.A0)
    if isinstance(spec, BumpsSpec):
        return BumpsIntensity(spec.A0)
    if isinstance(spec, PiecewiseLinearSpec):
        return PiecewiseLinearIntensity(tuple(spec.knots), tuple(spec.values), spec.T)
    raise ConfigurationError(f"unsupported model spec: {spec!r}")


def load_model(source: Union[str, dict]) -> IntensityModel:
    """Build a model from a JSON file path, a JSON string or a parsed dict."""
    if isinstance(source, str):
        if os.path.exists(source):
            with open(source) as f:
                source = json.load(f)
        else:
            try:
                source = json.loads(source)
            except json.JSONDecodeError as e:
                raise ConfigurationError(f"model spec is neither a file nor JSON: {e}") from e
    try:
        spec = _SPEC_ADAPTER.validate_python(source)
    except ValidationError as e:
        raise ConfigurationError(f"invalid model spec: {e}") from e
    return model_from_spec(spec)
