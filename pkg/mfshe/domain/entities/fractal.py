import math
from dataclasses import dataclass
from dataclasses import field

import numpy as np
from numpy.typing import ArrayLike
from numpy.typing import NDArray

from mfshe.domain.exceptions import InvalidParametersError
from mfshe.domain.types import CoverScheme
from mfshe.domain.types import GaugeKind


def _as_points(points: ArrayLike, d: int) -> NDArray[np.float64]:
    array = np.asarray(points, dtype=float)
    if array.size == 0:
        return array.reshape(0, d)
    if d == 1 and array.ndim == 1:
        array = array[:, np.newaxis]
    if array.ndim != 2 or array.shape[1] != d:
        raise InvalidParametersError(f"expected points of shape (N, {d}), got {array.shape}")
    return array


@dataclass(frozen=True, kw_only=True)
class Shell:
    """S_n = V_n minus V_{n-1} with V_n = [-e^n, e^n)^d, and S_0 = V_0."""

    n: int
    d: int

    def __post_init__(self) -> None:
        if self.n < 0 or self.d < 1:
            raise InvalidParametersError(f"need n >= 0 and d >= 1, got n = {self.n!r}, d = {self.d!r}")

    @property
    def outer(self) -> float:
        return math.exp(self.n)

    @property
    def inner(self) -> float:
        """Half-side of the excluded box V_{n-1}; 0 for the first shell."""
        return math.exp(self.n - 1) if self.n > 0 else 0.0

    @staticmethod
    def index_of(points: ArrayLike, d: int) -> NDArray[np.int64]:
        """Smallest n with the point in V_n, row by row."""
        array = _as_points(points, d)
        index = np.zeros(array.shape, dtype=np.int64)
        positive, negative = array > 0.0, array < 0.0
        with np.errstate(divide="ignore"):
            index[positive] = np.floor(np.log(array[positive])).astype(np.int64) + 1
            index[negative] = np.ceil(np.log(-array[negative])).astype(np.int64)
        return np.maximum(index, 0).max(axis=1) if array.shape[0] else np.zeros(0, dtype=np.int64)

    def contains(self, points: ArrayLike) -> NDArray[np.bool_]:
        return self.index_of(points, self.d) == self.n


@dataclass(frozen=True, kw_only=True)
class Cube:
    """Half-open cube Q(x, r) = [x_1, x_1 + r) x ... x [x_d, x_d + r) with r >= 1."""

    corner: tuple[float, ...]
    side: float

    def __post_init__(self) -> None:
        if not self.side >= 1.0:
            raise InvalidParametersError(f"cube side must be at least 1, got {self.side!r}")

    @property
    def d(self) -> int:
        return len(self.corner)

    def contains(self, points: ArrayLike) -> NDArray[np.bool_]:
        array = _as_points(points, self.d)
        corner = np.asarray(self.corner)
        return np.all((array >= corner) & (array < corner + self.side), axis=1)


@dataclass(frozen=True, kw_only=True)
class GaugeRule:
    """Site-dependent threshold defining a peak set.

    linear-she: Z(x) >= (2 variance gamma log+|x|)^{1/2}.
    pam: log+ u(x) >= gamma time_factor (log+|x|)^{power}.
    log+ r = log(max(r, e)).
    """

    kind: GaugeKind
    gamma: float
    variance: float = 1.0
    time_factor: float = 1.0
    power: float = 1.0

    def __post_init__(self) -> None:
        if not self.gamma >= 0.0:
            raise InvalidParametersError(f"gamma must be nonnegative, got {self.gamma!r}")
        if not (self.variance > 0.0 and self.time_factor > 0.0 and self.power > 0.0):
            raise InvalidParametersError("gauge normalizations must be positive")

    @staticmethod
    def log_plus(values: ArrayLike) -> NDArray[np.float64]:
        return np.log(np.maximum(np.asarray(values, dtype=float), math.e))

    def threshold(self, norms: ArrayLike) -> NDArray[np.float64]:
        levels = self.log_plus(norms)
        if self.kind is GaugeKind.LINEAR_SHE:
            return np.sqrt(2.0 * self.variance * self.gamma * levels)
        return self.gamma * self.time_factor * levels**self.power

    def statistic(self, values: ArrayLike) -> NDArray[np.float64]:
        if self.kind is GaugeKind.LINEAR_SHE:
            return np.asarray(values, dtype=float)
        return self.log_plus(values)


@dataclass(frozen=True, kw_only=True, eq=False)
class PeakSet:
    """Duplicate-free integer lattice points, each tagged with its shell index."""

    d: int
    points: NDArray[np.int64]
    shells: NDArray[np.int64]
    gauge: GaugeKind | None = None
    gamma: float | None = None
    source: str = ""

    def __post_init__(self) -> None:
        points = np.asarray(self.points, dtype=np.int64).reshape(-1, self.d)
        shells = np.asarray(self.shells, dtype=np.int64).reshape(-1)
        if points.shape[0] != shells.shape[0]:
            raise InvalidParametersError("every point needs exactly one shell tag")
        if points.shape[0] and np.unique(points, axis=0).shape[0] != points.shape[0]:
            raise InvalidParametersError("peak points must be distinct")
        if not np.array_equal(Shell.index_of(points, self.d), shells):
            raise InvalidParametersError("a peak point is tagged with the wrong shell")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "shells", shells)

    @classmethod
    def from_points(
        cls,
        points: ArrayLike,
        d: int,
        *,
        gauge: GaugeKind | None = None,
        gamma: float | None = None,
        source: str = "",
    ) -> "PeakSet":
        """Tags and deduplicates arbitrary integer points."""
        array = np.unique(np.rint(_as_points(points, d)).astype(np.int64), axis=0)
        return cls(d=d, points=array, shells=Shell.index_of(array, d), gauge=gauge, gamma=gamma, source=source)

    def __len__(self) -> int:
        return int(self.points.shape[0])

    def in_shell(self, n: int) -> NDArray[np.int64]:
        return self.points[self.shells == n]

    def shell_counts(self) -> dict[int, int]:
        indices, counts = np.unique(self.shells, return_counts=True)
        return {int(n): int(c) for n, c in zip(indices, counts, strict=True)}


@dataclass(frozen=True, kw_only=True)
class ShellCover:
    n: int
    occupied: int
    nu: dict[float, float] = field(default_factory=dict)


@dataclass(frozen=True, kw_only=True)
class DimensionEstimate:
    """Slope of log(occupied boxes) against n.

    ``band`` is twice the regression standard error plus an allowance of 0.5 / (n_max - n_min)
    for the o(n) terms of the counts. A degenerate estimate comes from too few occupied shells.
    """

    value: float
    band: float
    stderr: float
    intercept: float
    n_min: int
    n_max: int
    degenerate: bool = False

    @property
    def interval(self) -> tuple[float, float]:
        return self.value - self.band, self.value + self.band


@dataclass(frozen=True, kw_only=True)
class CoverReport:
    d: int
    scheme: CoverScheme
    rho_grid: tuple[float, ...]
    shells: tuple[ShellCover, ...]
    estimate: DimensionEstimate | None = None

    def counts(self) -> dict[int, int]:
        return {shell.n: shell.occupied for shell in self.shells}


@dataclass(frozen=True, kw_only=True)
class SkeletonSpec:
    """Pi_n(theta), the d-fold product of A_n(theta) = {e^n + j e^{theta n} : 0 <= j <= e^{n(1-theta)}}."""

    theta: float
    n: int
    d: int

    def __post_init__(self) -> None:
        if not 0.0 < self.theta < 1.0:
            raise InvalidParametersError(f"theta must lie in (0, 1), got {self.theta!r}")
        if self.n < 0 or self.d < 1:
            raise InvalidParametersError(f"need n >= 0 and d >= 1, got n = {self.n!r}, d = {self.d!r}")

    @property
    def points_per_axis(self) -> int:
        return math.floor(math.exp(self.n * (1.0 - self.theta))) + 1

    @property
    def cube_side(self) -> float:
        return math.exp(self.theta * self.n)


@dataclass(frozen=True, kw_only=True)
class ThicknessResult:
    thick: bool
    shells_checked: int
    witness_n: int | None = None
    witness_x: tuple[float, ...] | None = None


@dataclass(frozen=True, kw_only=True)
class TailFit:
    """-log P{X > z} ~ coefficient z^b + a log z + c over z in [z_min, z_max].

    ``slope`` is the plain log-log slope of -log P against z over the same points. It drifts below b
    when the logarithmic correction matters, as for Gaussian tails.
    """

    b: float
    slope: float
    coefficient: float
    c_lower: float
    c_upper: float
    z_min: float
    z_max: float
    points: int
