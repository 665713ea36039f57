"""Macroscopic Hausdorff dimension: shells, cube covers, skeletons, thickness and tail fits."""

import logging
import math
from collections.abc import Iterable
from collections.abc import Sequence
from typing import Final

import numpy as np
from numpy.typing import ArrayLike
from numpy.typing import NDArray
from scipy import spatial
from scipy import stats

from mfshe.domain.entities.field import FieldSample
from mfshe.domain.entities.field import LatticeSpec
from mfshe.domain.entities.fractal import CoverReport
from mfshe.domain.entities.fractal import DimensionEstimate
from mfshe.domain.entities.fractal import GaugeRule
from mfshe.domain.entities.fractal import PeakSet
from mfshe.domain.entities.fractal import Shell
from mfshe.domain.entities.fractal import ShellCover
from mfshe.domain.entities.fractal import SkeletonSpec
from mfshe.domain.entities.fractal import TailFit
from mfshe.domain.entities.fractal import ThicknessResult
from mfshe.domain.entities.model import ModelParams
from mfshe.domain.exceptions import CensoringError
from mfshe.domain.exceptions import InsufficientShellsError
from mfshe.domain.exceptions import InvalidParametersError
from mfshe.domain.exceptions import ShellMembershipError
from mfshe.domain.exceptions import SpacingError
from mfshe.domain.services import kernels
from mfshe.domain.services.random import Stream
from mfshe.domain.services.random import stream
from mfshe.domain.types import CoverScheme
from mfshe.domain.types import GaugeKind

logger = logging.getLogger(__name__)

MIN_FIT_SHELLS: Final[int] = 4
# Allowance, divided by the shell span, for the o(n) terms of the log counts.
SYSTEMATIC_BAND: Final[float] = 0.5
MIN_TAIL_SAMPLES: Final[int] = 10_000
MIN_EXCEEDANCES: Final[int] = 20
TAIL_QUANTILE: Final[float] = 0.95
TAIL_GRID_POINTS: Final[int] = 60
DEFAULT_B_GRID: Final[NDArray[np.float64]] = np.round(np.arange(0.5, 3.0001, 0.05), 10)
DEFAULT_RHO_GRID: Final[tuple[float, ...]] = (0.25, 0.5, 0.75, 1.0)


def shell_index(points: ArrayLike, d: int) -> NDArray[np.int64]:
    return Shell.index_of(points, d)


def shell_site_count(n: int, d: int) -> int:
    """Number of integer points of the shell S_n."""

    def box(k: int) -> int:
        # integers in [-e^k, e^k)
        return math.ceil(math.exp(k)) + math.floor(math.exp(k))

    return box(n) ** d - (box(n - 1) ** d if n > 0 else 0)


def orthant_site_count(n: int, d: int) -> int:
    """Number of integer points of [e^{n-1}, e^n)^d, the part of S_n sampled by the experiments."""
    if n == 0:
        return 1
    return (math.ceil(math.exp(n)) - math.ceil(math.exp(n - 1))) ** d


def orthant_lattice(n: int, d: int) -> LatticeSpec:
    """Unit-spacing lattice on the integer points of [e^{n-1}, e^n)^d."""
    start = math.ceil(math.exp(n - 1)) if n > 0 else 0
    per_axis = orthant_site_count(n, 1)
    return LatticeSpec(d=d, origin=(float(start),) * d, spacing=1.0, shape=(per_axis,) * d)


def _shell_points(points: ArrayLike, n: int, d: int) -> NDArray[np.int64]:
    array = np.asarray(points)
    array = np.rint(array.reshape(-1, d) if array.size else np.zeros((0, d))).astype(np.int64)
    if array.shape[0] and not np.all(Shell.index_of(array, d) == n):
        raise ShellMembershipError(f"some points do not lie in shell {n}")
    return np.unique(array, axis=0)


def _dyadic_blocks(points: NDArray[np.int64], n: int, d: int) -> list[int]:
    """Counts of maximal fully occupied aligned dyadic blocks per level, merged while 2^{j+1} <= e^n."""
    counts = []
    full = points
    level = 0
    while full.shape[0]:
        if 2.0 ** (level + 1) > math.exp(n):
            counts.append(int(full.shape[0]))
            break
        parents, children = np.unique(np.floor_divide(full, 2), axis=0, return_counts=True)
        complete = parents[children == 2**d]
        counts.append(int(full.shape[0] - complete.shape[0] * 2**d))
        full = complete
        level += 1
    return counts


def nu_rho(points: ArrayLike, n: int, rho: float, scheme: CoverScheme, d: int) -> float:
    """Upper bound on min sum (s(Q_i) / e^n)^rho over covers of the points of shell n by cubes.

    unit-lattice covers every occupied unit box; greedy-dyadic merges fully occupied aligned
    dyadic blocks whenever the merge lowers the sum, which it does exactly when rho <= d.

    Raises:
        ShellMembershipError: if a point lies outside shell n.
    """
    if not rho > 0.0:
        raise InvalidParametersError(f"rho must be positive, got {rho!r}")
    occupied = _shell_points(points, n, d)
    scale = math.exp(-n * rho)
    if scheme is CoverScheme.UNIT_LATTICE:
        return occupied.shape[0] * scale
    exponent = min(rho, d)
    return scale * sum(count * 2.0 ** (level * exponent) for level, count in enumerate(_dyadic_blocks(occupied, n, d)))


def min_cover_nu(points: ArrayLike, n: int, rho: float) -> float:
    """Exact min sum (s(Q_i) / e^n)^rho over covers of the points of shell n by intervals, d = 1.

    Some optimal cover gives each interval a run of consecutive occupied points, so a dynamic program
    over the runs of the sorted points reaches the minimum. An interval spanning points p <= q has
    side q - p + 1, as for the unit boxes.

    Raises:
        ShellMembershipError: if a point lies outside shell n.
    """
    if not rho > 0.0:
        raise InvalidParametersError(f"rho must be positive, got {rho!r}")
    occupied = np.sort(_shell_points(points, n, 1)[:, 0]).astype(float)
    best = np.zeros(occupied.size + 1)
    for end in range(1, occupied.size + 1):
        spans = occupied[end - 1] - occupied[:end] + 1.0
        best[end] = np.min(best[:end] + spans**rho)
    return math.exp(-n * rho) * float(best[-1])


def cover_shell(points: ArrayLike, n: int, d: int, rho_grid: Sequence[float], scheme: CoverScheme) -> ShellCover:
    occupied = _shell_points(points, n, d)
    return ShellCover(
        n=n,
        occupied=int(occupied.shape[0]),
        nu={float(rho): nu_rho(occupied, n, rho, scheme, d) for rho in rho_grid},
    )


def build_cover_report(
    peaks: PeakSet,
    rho_grid: Sequence[float] = DEFAULT_RHO_GRID,
    scheme: CoverScheme = CoverScheme.UNIT_LATTICE,
    shells: Iterable[int] | None = None,
) -> CoverReport:
    indices = sorted(peaks.shell_counts()) if shells is None else list(shells)
    covers = tuple(cover_shell(peaks.in_shell(n), n, peaks.d, rho_grid, scheme) for n in indices)
    return CoverReport(d=peaks.d, scheme=scheme, rho_grid=tuple(float(rho) for rho in rho_grid), shells=covers)


def estimate_dimension(report: CoverReport, n_range: tuple[int, int] | None = None) -> DimensionEstimate:
    """Least-squares slope of log(occupied count) against n over the nonempty shells of ``n_range``.

    Raises:
        InsufficientShellsError: if fewer than four nonempty shells fall in the range.
    """
    low, high = n_range if n_range is not None else (-math.inf, math.inf)
    usable = sorted(
        (shell for shell in report.shells if low <= shell.n <= high and shell.occupied > 0),
        key=lambda shell: shell.n,
    )
    if len(usable) < MIN_FIT_SHELLS:
        raise InsufficientShellsError(f"{len(usable)} nonempty shells in range, at least {MIN_FIT_SHELLS} needed")

    ns = np.array([shell.n for shell in usable], dtype=float)
    fit = stats.linregress(ns, np.log([shell.occupied for shell in usable]))
    span = float(ns[-1] - ns[0])
    estimate = DimensionEstimate(
        value=float(fit.slope),
        band=2.0 * float(fit.stderr) + SYSTEMATIC_BAND / span,
        stderr=float(fit.stderr),
        intercept=float(fit.intercept),
        n_min=int(ns[0]),
        n_max=int(ns[-1]),
    )
    logger.debug("Dimension estimated", extra={"value": estimate.value, "band": estimate.band})
    return estimate


def synthetic_occupancy_report(
    d: int,
    gamma: float,
    shells: Iterable[int],
    seed: int,
    rho_grid: Sequence[float] = DEFAULT_RHO_GRID,
) -> CoverReport:
    """Occupied counts Binomial(orthant sites, e^{-gamma n}) per shell, unit-lattice covers."""
    if not gamma >= 0.0:
        raise InvalidParametersError(f"gamma must be nonnegative, got {gamma!r}")
    covers = []
    for n in shells:
        occupied = int(stream(seed, Stream.OCCUPANCY, n).binomial(orthant_site_count(n, d), math.exp(-gamma * n)))
        nu = {float(rho): occupied * math.exp(-n * rho) for rho in rho_grid}
        covers.append(ShellCover(n=n, occupied=occupied, nu=nu))
    return CoverReport(d=d, scheme=CoverScheme.UNIT_LATTICE, rho_grid=tuple(rho_grid), shells=tuple(covers))


def gauge_rule(kind: GaugeKind, gamma: float, params: ModelParams) -> GaugeRule:
    """Threshold rule normalized with the variance of this implementation."""
    if kind is GaugeKind.LINEAR_SHE:
        return GaugeRule(kind=kind, gamma=gamma, variance=kernels.variance(params))
    alpha, beta = params.alpha, params.beta
    return GaugeRule(
        kind=kind,
        gamma=gamma,
        time_factor=params.t ** ((alpha - beta) / (2.0 * alpha - beta)),
        power=alpha / (2.0 * alpha - beta),
    )


def extract_peaks(values: ArrayLike, lattice: LatticeSpec, rule: GaugeRule, *, source: str = "") -> PeakSet:
    """Sites whose value meets the gauge threshold at their own norm.

    Raises:
        SpacingError: unless the lattice is the unit-spacing integer lattice.
    """
    if lattice.spacing != 1.0 or any(origin != round(origin) for origin in lattice.origin):
        raise SpacingError(f"peaks need a unit-spacing integer lattice, got spacing {lattice.spacing}")
    coordinates = lattice.coordinates()
    norms = np.linalg.norm(coordinates, axis=1)
    values = np.asarray(values, dtype=float).reshape(-1)
    selected = coordinates[rule.statistic(values) >= rule.threshold(norms)]
    return PeakSet.from_points(selected, lattice.d, gauge=rule.kind, gamma=rule.gamma, source=source)


def extract_field_peaks(sample: FieldSample, kind: GaugeKind, gamma: float) -> PeakSet:
    rule = gauge_rule(kind, gamma, sample.params)
    return extract_peaks(sample.values, sample.lattice, rule, source=f"{sample.scheme}:{sample.seed}")


def merge_peaks(parts: Sequence[PeakSet]) -> PeakSet:
    if not parts:
        raise InvalidParametersError("nothing to merge")
    first = parts[0]
    points = np.concatenate([part.points for part in parts])
    return PeakSet.from_points(points, first.d, gauge=first.gauge, gamma=first.gamma, source=first.source)


def skeleton(spec: SkeletonSpec) -> NDArray[np.float64]:
    """Pi_n(theta) as an array of shape (points_per_axis^d, d)."""
    axis = math.exp(spec.n) + np.arange(spec.points_per_axis) * spec.cube_side
    grids = np.meshgrid(*([axis] * spec.d), indexing="ij")
    return np.stack([grid.ravel() for grid in grids], axis=-1)


def skeleton_lattice_points(theta: float, shells: Iterable[int], d: int) -> PeakSet:
    """Integer representatives ceil(x) of the union of Pi_n(theta) over ``shells``."""
    parts = [np.ceil(skeleton(SkeletonSpec(theta=theta, n=n, d=d))) for n in shells]
    points = np.concatenate(parts) if parts else np.zeros((0, d))
    return PeakSet.from_points(points, d, source=f"skeleton theta={theta}")


def is_theta_thick(peaks: PeakSet, theta: float, start: int, end: int | None = None) -> ThicknessResult:
    """Checks that every cube Q(x, e^{theta n}), x in Pi_n(theta), start <= n <= end, meets the set.

    Pi_n(theta) lies in shell n + 1, so ``end`` defaults to the largest tagged shell minus one.
    """
    if end is None:
        end = int(peaks.shells.max()) - 1 if len(peaks) else start
    tree = spatial.cKDTree(peaks.points) if len(peaks) else None
    checked = 0
    for n in range(start, end + 1):
        spec = SkeletonSpec(theta=theta, n=n, d=peaks.d)
        anchors = skeleton(spec)
        side = spec.cube_side
        if tree is None:
            return ThicknessResult(thick=False, shells_checked=checked, witness_n=n, witness_x=tuple(anchors[0]))
        neighbours = tree.query_ball_point(anchors + side / 2.0, r=side / 2.0, p=np.inf)
        for anchor, indices in zip(anchors, neighbours, strict=True):
            inside = peaks.points[indices]
            if not np.any(np.all((inside >= anchor) & (inside < anchor + side), axis=1)):
                return ThicknessResult(thick=False, shells_checked=checked, witness_n=n, witness_x=tuple(anchor))
        checked += 1
    return ThicknessResult(thick=True, shells_checked=checked)


def tail_exponent_fit(samples: ArrayLike, b_grid: ArrayLike | None = None) -> TailFit:
    """Fits -log P{X > z} = c z^b + a log z + e by weighted least squares, b chosen on a grid.

    z runs from the 0.95 quantile to the level leaving MIN_EXCEEDANCES exceedances; the weights are
    the inverse delta-method variances of log P. The constants bracket c by two standard errors.
    The plain slope of log(-log P) against log z is fitted on the same points with matching weights.

    Raises:
        CensoringError: if the resolvable tail is empty or not positive.
    """
    values = np.sort(np.asarray(samples, dtype=float))
    size = values.size
    if size < MIN_TAIL_SAMPLES:
        raise InvalidParametersError(f"at least {MIN_TAIL_SAMPLES} samples are needed, got {size}")
    z_min = float(np.quantile(values, TAIL_QUANTILE))
    z_max = float(values[-MIN_EXCEEDANCES - 1])
    if not 0.0 < z_min < z_max:
        raise CensoringError(f"no resolvable positive tail between {z_min} and {z_max}")

    zs = np.linspace(z_min, z_max, TAIL_GRID_POINTS)
    exceed = size - np.searchsorted(values, zs, side="right")
    if exceed.min() < MIN_EXCEEDANCES:
        raise CensoringError(f"fewer than {MIN_EXCEEDANCES} exceedances at z = {z_max}")
    probabilities = exceed / size
    response = -np.log(probabilities)
    sqrt_weights = np.sqrt(size * probabilities / (1.0 - probabilities))

    grid = np.asarray(DEFAULT_B_GRID if b_grid is None else b_grid, dtype=float)
    if grid.size == 0 or np.any(grid <= 0.0):
        raise InvalidParametersError("the b grid must hold positive exponents")

    def weighted_fit(b: float) -> tuple[float, NDArray[np.float64], NDArray[np.float64]]:
        design = np.column_stack([zs**b, np.log(zs), np.ones_like(zs)]) * sqrt_weights[:, np.newaxis]
        coef, _, _, _ = np.linalg.lstsq(design, response * sqrt_weights, rcond=None)
        return float(np.sum((response * sqrt_weights - design @ coef) ** 2)), coef, design

    fits = [weighted_fit(float(b)) for b in grid]
    best = int(np.argmin([fit[0] for fit in fits]))
    b = float(grid[best])
    sse, coef, weighted = fits[best]

    covariance = sse / (zs.size - weighted.shape[1]) * np.linalg.pinv(weighted.T @ weighted)
    spread = 2.0 * math.sqrt(max(float(covariance[0, 0]), 0.0))
    # sd of log(-log P) is sd(log P) / -log P
    slope = np.polyfit(np.log(zs), np.log(response), 1, w=sqrt_weights * response)[0]
    return TailFit(
        b=b,
        slope=float(slope),
        coefficient=float(coef[0]),
        c_lower=float(coef[0]) - spread,
        c_upper=float(coef[0]) + spread,
        z_min=z_min,
        z_max=z_max,
        points=int(zs.size),
    )
