import math
from dataclasses import dataclass
from dataclasses import field
from typing import Any

import numpy as np
from numpy.typing import NDArray

from mfshe.domain.entities.model import ModelParams
from mfshe.domain.exceptions import InvalidParametersError
from mfshe.domain.types import SamplerScheme


@dataclass(frozen=True, kw_only=True)
class LatticeSpec:
    """Rectangular lattice ``origin + spacing * i`` for multi-indices ``0 <= i < shape``."""

    d: int
    origin: tuple[float, ...]
    spacing: float
    shape: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.d < 1:
            raise InvalidParametersError(f"d must be a positive integer, got {self.d!r}")
        if len(self.origin) != self.d or len(self.shape) != self.d:
            raise InvalidParametersError(f"origin and shape must have {self.d} components")
        if not (self.spacing > 0.0 and math.isfinite(self.spacing)):
            raise InvalidParametersError(f"spacing must be positive, got {self.spacing!r}")
        if any(n < 1 for n in self.shape):
            raise InvalidParametersError(f"every axis needs at least one site, got shape {self.shape}")

    @classmethod
    def cube(cls, *, d: int, sites: int, spacing: float) -> "LatticeSpec":
        return cls(d=d, origin=(0.0,) * d, spacing=spacing, shape=(sites,) * d)

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    @property
    def extent(self) -> tuple[float, ...]:
        return tuple((n - 1) * self.spacing for n in self.shape)

    def coordinates(self) -> NDArray[np.float64]:
        """Site coordinates in row-major order, shape (size, d)."""
        axes = [o + self.spacing * np.arange(n) for o, n in zip(self.origin, self.shape, strict=True)]
        grids = np.meshgrid(*axes, indexing="ij")
        return np.stack([grid.ravel() for grid in grids], axis=-1)


@dataclass(frozen=True, kw_only=True, eq=False)
class FieldSample:
    lattice: LatticeSpec
    values: NDArray[np.float64]
    params: ModelParams
    seed: int
    scheme: SamplerScheme
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.values.size != self.lattice.size:
            raise InvalidParametersError(
                f"expected {self.lattice.size} values for shape {self.lattice.shape}, got {self.values.size}"
            )
        if not np.all(np.isfinite(self.values)):
            raise InvalidParametersError("field values must be finite")
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64).reshape(self.lattice.shape))


@dataclass(frozen=True, kw_only=True)
class EquiCorrelatedSpec:
    """m standard normals with common pairwise correlation r."""

    m: int
    r: float

    def __post_init__(self) -> None:
        if self.m < 1:
            raise InvalidParametersError(f"m must be positive, got {self.m!r}")
        if not 0.0 <= self.r < 1.0:
            raise InvalidParametersError(f"r must lie in [0, 1), got {self.r!r}")


@dataclass(frozen=True, kw_only=True)
class TailPoint:
    lam: float
    probability: float
    stderr: float


@dataclass(frozen=True, kw_only=True)
class SlepianProbe:
    """Paired estimates of P{max <= lam} for equi-correlated variables and for field points."""

    lam: float
    correlation: float
    equicorrelated: float
    equicorrelated_stderr: float
    field_points: float
    field_points_stderr: float

    @property
    def gap(self) -> float:
        return self.equicorrelated - self.field_points

    @property
    def gap_stderr(self) -> float:
        return math.hypot(self.equicorrelated_stderr, self.field_points_stderr)
