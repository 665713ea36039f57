import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.typing import NDArray

from mfshe.domain.entities.model import ModelParams
from mfshe.domain.exceptions import InvalidParametersError
from mfshe.domain.types import ItoIncrement
from mfshe.domain.types import NoiseModel


@dataclass(frozen=True, kw_only=True)
class PamConfig:
    """Discretization of the parabolic Anderson model on the periodic cube [0, torus_side)^d.

    ``dt_bound`` is the largest step for which the per-site noise increment has standard deviation
    at most 0.25; it is computed by ``configure_pam`` and checked here.
    """

    params: ModelParams
    torus_side: float
    grid_n: int
    dt: float
    dt_bound: float
    seed: int = 0
    noise: NoiseModel = NoiseModel.SPECTRAL
    increment: ItoIncrement = ItoIncrement.EXPONENTIAL
    noise_scale: float = 1.0

    def __post_init__(self) -> None:
        if self.grid_n < 2 or self.grid_n & (self.grid_n - 1):
            raise InvalidParametersError(f"grid_n must be a power of two, got {self.grid_n!r}")
        if not (self.torus_side > 0.0 and math.isfinite(self.torus_side)):
            raise InvalidParametersError(f"torus_side must be positive, got {self.torus_side!r}")
        if not self.dt > 0.0:
            raise InvalidParametersError(f"dt must be positive, got {self.dt!r}")
        if self.dt > self.dt_bound * (1.0 + 1e-9):
            raise InvalidParametersError(f"dt = {self.dt} exceeds the stability bound {self.dt_bound}")
        if abs(self.steps * self.dt - self.params.t) > 1e-9 * self.params.t:
            raise InvalidParametersError(f"t = {self.params.t} is not a multiple of dt = {self.dt}")
        if self.noise_scale < 0.0:
            raise InvalidParametersError(f"noise_scale must be nonnegative, got {self.noise_scale!r}")
        if self.seed < 0:
            raise InvalidParametersError(f"seed must be nonnegative, got {self.seed!r}")

    @property
    def interpretation(self) -> Literal["ito"]:
        return "ito"

    @property
    def steps(self) -> int:
        return max(1, round(self.params.t / self.dt))

    @property
    def spacing(self) -> float:
        return self.torus_side / self.grid_n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.grid_n,) * self.params.d

    @property
    def diameter(self) -> float:
        """Largest minimum-image distance on the torus."""
        return math.sqrt(self.params.d) * self.torus_side / 2.0


@dataclass(frozen=True, kw_only=True)
class PicardSpec:
    """Localized Picard iterate u^(ell, m): kernel truncated at ell, m iterations."""

    ell: float
    m: int
    params: ModelParams

    def __post_init__(self) -> None:
        if not self.ell > 0.0:
            raise InvalidParametersError(f"ell must be positive, got {self.ell!r}")
        if self.m < 0:
            raise InvalidParametersError(f"m must be nonnegative, got {self.m!r}")

    def box_half_width(self, t: float) -> float:
        """Sup-norm half-width ell t^{1/alpha} of the integration box at time t."""
        return self.ell * t ** (1.0 / self.params.alpha)

    @property
    def reach(self) -> float:
        """Distance the iterate at time t depends on through one Picard step."""
        return self.box_half_width(self.params.t) + self.ell


@dataclass(frozen=True, kw_only=True)
class MomentEstimate:
    k: int
    value: float
    log_value: float
    stderr: float
    n_paths: int
    dt_path: float
    cap: float
    t: float

    def __post_init__(self) -> None:
        if not self.value > 0.0:
            raise InvalidParametersError(f"a moment estimate must be positive, got {self.value!r}")
        if not self.stderr >= 0.0:
            raise InvalidParametersError(f"stderr must be nonnegative, got {self.stderr!r}")

    @property
    def relative_stderr(self) -> float:
        return self.stderr / self.value if math.isfinite(self.value) else math.inf


@dataclass(frozen=True, kw_only=True)
class MomentBracket:
    """Empirical c_lower <= log E u_t^k / (t k^q) <= c_upper over the estimated orders."""

    q: float
    c_lower: float
    c_upper: float
    t: float


@dataclass(frozen=True, kw_only=True)
class LocalizationSchedule:
    n: int
    ell: float
    m: int
    k: int


@dataclass(frozen=True, kw_only=True, eq=False)
class PamRun:
    cfg: PamConfig
    seed: int
    values: NDArray[np.float64]
    positivity_violations: int

    @property
    def replicas(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True, kw_only=True)
class DecayPoint:
    level: int
    mean_square: float
    stderr: float


@dataclass(frozen=True, kw_only=True)
class ExceedancePoint:
    z: float
    probability: float
    stderr: float
    exceedances: int
    censored: bool
