"""Parabolic Anderson model on a periodic torus, localized Picard iterates and Feynman-Kac moments.

The solver, the Picard iterates and the paired reference runs of one replica all consume the same
white-noise cells eta_j, drawn in time order from ``noise_stream(seed, replica)``.
"""

import logging
import math
import warnings
from collections.abc import Iterator
from collections.abc import Sequence
from dataclasses import dataclass
from functools import lru_cache
from typing import Final
from typing import Self

import numpy as np
from numpy.typing import ArrayLike
from numpy.typing import NDArray
from scipy import fft
from scipy import special
from scipy import stats

from mfshe.domain.entities.model import ModelParams
from mfshe.domain.entities.pam import DecayPoint
from mfshe.domain.entities.pam import ExceedancePoint
from mfshe.domain.entities.pam import LocalizationSchedule
from mfshe.domain.entities.pam import MomentBracket
from mfshe.domain.entities.pam import MomentEstimate
from mfshe.domain.entities.pam import PamConfig
from mfshe.domain.entities.pam import PamRun
from mfshe.domain.entities.pam import PicardSpec
from mfshe.domain.exceptions import BlowupError
from mfshe.domain.exceptions import GeometryError
from mfshe.domain.exceptions import InvalidParametersError
from mfshe.domain.exceptions import VarianceExplosionWarning
from mfshe.domain.services import kernels
from mfshe.domain.services.random import Stream
from mfshe.domain.services.random import stream
from mfshe.domain.types import ItoIncrement
from mfshe.domain.types import NoiseModel

logger = logging.getLogger(__name__)

OVERFLOW_LIMIT: Final[float] = 1e300
NOISE_STD_LIMIT: Final[float] = 0.25
MIN_STEPS: Final[int] = 10
REPLICA_BATCH: Final[int] = 64
# Complex entries of the Picard transfer table (16 bytes each).
PICARD_TABLE_LIMIT: Final[int] = 2**26
RELATIVE_STDERR_LIMIT: Final[float] = 0.5
MIN_EXCEEDANCES: Final[int] = 20
DEFAULT_CAPS: Final[tuple[float, ...]] = (1e2, 1e3, 1e4)
# Largest cap * dt_path before a single capped step dominates the path functional.
CAP_STEP_LIMIT: Final[float] = 1.0


def noise_stream(seed: int, replica: int) -> np.random.Generator:
    return stream(seed, Stream.PAM, replica)


def noise_rate(
    params: ModelParams,
    torus_side: float,
    grid_n: int,
    noise: NoiseModel,
    noise_scale: float = 1.0,
) -> float:
    """Per-site variance of the noise increment per unit time."""
    shape = (grid_n,) * params.d
    if noise is NoiseModel.SPECTRAL:
        rate = float(kernels.torus_weights(shape, torus_side, params).sum())
    else:
        spacing = torus_side / grid_n
        grid = kernels.factor_grid(kernels.factorize(params), shape, spacing)
        rate = float((grid**2).sum()) * spacing**params.d
    return noise_scale**2 * rate


def configure_pam(
    params: ModelParams,
    *,
    torus_side: float,
    grid_n: int,
    dt: float | None = None,
    seed: int = 0,
    noise: NoiseModel = NoiseModel.SPECTRAL,
    increment: ItoIncrement = ItoIncrement.EXPONENTIAL,
    noise_scale: float = 1.0,
) -> PamConfig:
    """Builds a PamConfig with its stability bound; without ``dt`` the largest admissible step dividing t is used."""
    rate = noise_rate(params, torus_side, grid_n, noise, noise_scale)
    bound = NOISE_STD_LIMIT**2 / rate if rate > 0.0 else math.inf
    if dt is None:
        steps = max(math.ceil(params.t / bound), MIN_STEPS) if math.isfinite(bound) else MIN_STEPS
        dt = params.t / steps
    logger.debug("PAM discretization configured", extra={"dt": dt, "dt_bound": bound, "grid_n": grid_n})
    return PamConfig(
        params=params,
        torus_side=torus_side,
        grid_n=grid_n,
        dt=dt,
        dt_bound=bound,
        seed=seed,
        noise=noise,
        increment=increment,
        noise_scale=noise_scale,
    )


def positive_heat(multiplier: NDArray[np.float64], axes: tuple[int, ...]) -> NDArray[np.complex128]:
    """Transform of the periodized heat kernel with its negative lobes clipped and its mass restored to 1.

    The band-limited kernel of exp(-dt |k|^alpha) dips below zero once dt is small against the spacing;
    the clipped kernel maps positive fields to positive fields.
    """
    kernel = np.maximum(fft.ifftn(multiplier, axes=axes).real, 0.0)
    return fft.fftn(kernel / kernel.sum(), axes=axes)


@dataclass(frozen=True, kw_only=True, eq=False)
class TorusStepper:
    """One exponential-Euler step of the mild equation on the torus.

    Exponential increments use the clipped kernel of ``positive_heat``; linear increments keep the
    spectral multiplier, which the Picard iterates share.
    """

    cfg: PamConfig
    heat: NDArray[np.complex128]
    colouring: NDArray[np.complex128]
    cell_std: float
    site_variance: float

    @classmethod
    def from_config(cls, cfg: PamConfig) -> Self:
        params = cfg.params
        radii = kernels.torus_frequencies(cfg.shape, cfg.torus_side)
        cell_volume = cfg.spacing**params.d
        if cfg.noise is NoiseModel.SPECTRAL:
            weights = kernels.torus_weights(cfg.shape, cfg.torus_side, params)
            colouring = np.sqrt(weights.size * weights / cell_volume).astype(np.complex128)
        else:
            colouring = fft.fftn(kernels.factor_grid(kernels.factorize(params), cfg.shape, cfg.spacing))
        multiplier = np.exp(-cfg.dt * radii**params.alpha)
        if cfg.increment is ItoIncrement.EXPONENTIAL:
            heat = positive_heat(multiplier, tuple(range(-params.d, 0)))
        else:
            heat = multiplier.astype(np.complex128)
        return cls(
            cfg=cfg,
            heat=heat,
            colouring=cfg.noise_scale * colouring,
            cell_std=math.sqrt(cfg.dt * cell_volume),
            site_variance=cfg.dt * noise_rate(params, cfg.torus_side, cfg.grid_n, cfg.noise, cfg.noise_scale),
        )

    @property
    def axes(self) -> tuple[int, ...]:
        return tuple(range(-self.cfg.params.d, 0))

    def white(self, rng: np.random.Generator) -> NDArray[np.float64]:
        """Cell integrals of space-time white noise over one step, variance dt * spacing^d."""
        return self.cell_std * rng.standard_normal(self.cfg.shape)

    def colour(self, eta: NDArray[np.float64]) -> NDArray[np.float64]:
        return fft.ifftn(self.colouring * fft.fftn(eta, axes=self.axes), axes=self.axes).real

    def advance(self, state: NDArray[np.float64], eta: NDArray[np.float64]) -> NDArray[np.float64]:
        """u -> P_dt(u * (1 + dF)) or P_dt(u * exp(dF - Var dF / 2)), the noise taken at the left endpoint.

        Raises:
            BlowupError: if a value leaves the finite range or exceeds OVERFLOW_LIMIT in magnitude.
        """
        increment = self.colour(eta)
        if self.cfg.increment is ItoIncrement.EXPONENTIAL:
            kicked = state * np.exp(increment - self.site_variance / 2.0)
        else:
            kicked = state * (1.0 + increment)
        values = fft.ifftn(self.heat * fft.fftn(kicked, axes=self.axes), axes=self.axes).real
        if not np.all(np.isfinite(values)) or np.max(np.abs(values)) > OVERFLOW_LIMIT:
            raise BlowupError(f"PAM step overflowed with dt = {self.cfg.dt}; lower dt or t")
        return values


@lru_cache(maxsize=8)
def torus_stepper(cfg: PamConfig) -> TorusStepper:
    return TorusStepper.from_config(cfg)


def step_pam(state: ArrayLike, cfg: PamConfig, noise_seed: int) -> NDArray[np.float64]:
    state = np.asarray(state, dtype=float)
    if state.shape != cfg.shape:
        raise InvalidParametersError(f"state must have shape {cfg.shape}, got {state.shape}")
    if not np.all(np.isfinite(state)):
        raise InvalidParametersError("state must be finite")
    stepper = torus_stepper(cfg)
    return stepper.advance(state, stepper.white(stream(noise_seed, Stream.PAM)))


def simulate_pam(cfg: PamConfig, replicas: int, seed: int) -> PamRun:
    """Final fields u_t, u_0 = 1, of ``replicas`` independent runs, shape (replicas, *cfg.shape)."""
    if replicas < 1:
        raise InvalidParametersError(f"replicas must be positive, got {replicas!r}")
    stepper = torus_stepper(cfg)
    finals = np.empty((replicas, *cfg.shape))
    violations = 0
    for start in range(0, replicas, REPLICA_BATCH):
        batch = range(start, min(start + REPLICA_BATCH, replicas))
        rngs = [noise_stream(seed, replica) for replica in batch]
        values = np.ones((len(rngs), *cfg.shape))
        for _ in range(cfg.steps):
            values = stepper.advance(values, np.stack([stepper.white(rng) for rng in rngs]))
            violations += int(np.count_nonzero(values <= 0.0))
        finals[start : start + len(rngs)] = values

    if violations:
        logger.warning(
            "Nonpositive values in PAM simulation",
            extra={"count": violations, "increment": str(cfg.increment), "dt": cfg.dt},
        )
    logger.info("PAM simulation finished", extra={"replicas": replicas, "steps": cfg.steps})
    return PamRun(cfg=cfg, seed=seed, values=finals, positivity_violations=violations)


def _sup_distances(cfg: PamConfig) -> NDArray[np.float64]:
    axes = [np.abs(np.fft.fftfreq(cfg.grid_n, d=1.0 / cfg.grid_n)) * cfg.spacing] * cfg.params.d
    grids = np.meshgrid(*axes, indexing="ij")
    return np.maximum.reduce(grids) if len(grids) > 1 else grids[0]


@dataclass(frozen=True, kw_only=True, eq=False)
class PicardKernels:
    """Transforms of the box-truncated heat kernels and of the noise factor of a Picard iteration.

    ``transfers[i][j]`` is the transform of p_{(i-j) dt} restricted to the sup-norm box of
    half-width ell (i dt)^{1/alpha}, for 0 <= j < i.
    """

    spec: PicardSpec
    cfg: PamConfig
    colouring: NDArray[np.complex128]
    transfers: list[NDArray[np.complex128]]

    @classmethod
    def build(cls, spec: PicardSpec, cfg: PamConfig, *, truncate: bool = True) -> Self:
        steps, axes = cfg.steps, tuple(range(-cfg.params.d, 0))
        if steps * (steps + 1) // 2 * math.prod(cfg.shape) > PICARD_TABLE_LIMIT:
            raise InvalidParametersError("the Picard transfer table is too large; lower grid_n or raise dt")
        radii = kernels.torus_frequencies(cfg.shape, cfg.torus_side)
        semigroup = np.exp(-np.multiply.outer(cfg.dt * np.arange(1, steps + 1), radii**cfg.params.alpha))

        if truncate:
            factorization = kernels.factorize(cfg.params, cutoff=spec.ell)
            heat = fft.ifftn(semigroup, axes=axes).real
            distances = _sup_distances(cfg)
            transfers = [np.empty((0, *cfg.shape), dtype=np.complex128)]
            for i in range(1, steps + 1):
                mask = distances <= spec.box_half_width(i * cfg.dt)
                transfers.append(fft.fftn(heat[i - 1 :: -1] * mask, axes=axes))
        else:
            factorization = kernels.factorize(cfg.params)
            transfers = [np.empty((0, *cfg.shape), dtype=np.complex128)]
            transfers += [semigroup[i - 1 :: -1].astype(np.complex128) for i in range(1, steps + 1)]

        colouring = fft.fftn(kernels.factor_grid(factorization, cfg.shape, cfg.spacing))
        return cls(spec=spec, cfg=cfg, colouring=colouring, transfers=transfers)

    def levels(self, etas: NDArray[np.float64]) -> list[NDArray[np.float64]]:
        """Final-time fields of the iterates u^(ell, 0), ..., u^(ell, m) driven by the cells ``etas``."""
        cfg, axes = self.cfg, tuple(range(-self.cfg.params.d, 0))
        noise = fft.ifftn(self.colouring * fft.fftn(etas, axes=axes), axes=axes).real
        previous = np.ones((cfg.steps + 1, *cfg.shape))
        finals = [previous[-1].copy()]
        for _ in range(self.spec.m):
            source = fft.fftn(previous[:-1] * noise, axes=axes)
            current = np.ones_like(previous)
            for i in range(1, cfg.steps + 1):
                current[i] += fft.ifftn((self.transfers[i] * source[:i]).sum(axis=0), axes=axes).real
            previous = current
            finals.append(current[-1].copy())
        return finals


@lru_cache(maxsize=4)
def picard_kernels(spec: PicardSpec, cfg: PamConfig, truncate: bool = True) -> PicardKernels:
    return PicardKernels.build(spec, cfg, truncate=truncate)


def _replica_cells(cfg: PamConfig, seed: int, replica: int, fine: PamConfig | None = None) -> NDArray[np.float64]:
    """Cells of the time steps of ``cfg``; on a refined grid ``fine`` they sum its consecutive cells."""
    source = cfg if fine is None else fine
    stepper = torus_stepper(source)
    rng = noise_stream(seed, replica)
    cells = np.stack([stepper.white(rng) for _ in range(source.steps)])
    return cells.reshape(cfg.steps, source.steps // cfg.steps, *cfg.shape).sum(axis=1)


def _check_pairing(spec: PicardSpec, cfg: PamConfig) -> None:
    if spec.params != cfg.params:
        raise InvalidParametersError("the Picard spec and the PAM config describe different models")


def _check_geometry(spec: PicardSpec, cfg: PamConfig) -> None:
    if spec.reach > cfg.torus_side / 2.0:
        raise GeometryError(
            f"boxes of half-width {spec.box_half_width(cfg.params.t)} plus the factor support {spec.ell} "
            f"do not fit in half the torus side {cfg.torus_side}"
        )


def _site_indices(cfg: PamConfig, x_set: ArrayLike) -> tuple[NDArray[np.int64], ...]:
    points = np.atleast_2d(np.asarray(x_set, dtype=float))
    if cfg.params.d == 1 and points.shape[0] == 1 and points.shape[1] != 1:
        points = points.T
    if points.shape[1] != cfg.params.d:
        raise InvalidParametersError(f"points must have {cfg.params.d} coordinates")
    indices = np.rint(points / cfg.spacing).astype(np.int64) % cfg.grid_n
    return tuple(indices.T)


def picard_ladder(spec: PicardSpec, cfg: PamConfig, x_set: ArrayLike, seed: int) -> list[NDArray[np.float64]]:
    """Values of u^(ell, 0), ..., u^(ell, m) at the torus sites nearest to ``x_set``, replica 0 of ``seed``.

    Raises:
        GeometryError: if the integration boxes and the factor support do not fit in half the torus.
    """
    _check_pairing(spec, cfg)
    _check_geometry(spec, cfg)
    sites = _site_indices(cfg, x_set)
    levels = picard_kernels(spec, cfg).levels(_replica_cells(cfg, seed, 0))
    return [level[sites] for level in levels]


def picard_iterate(spec: PicardSpec, cfg: PamConfig, x_set: ArrayLike, seed: int) -> NDArray[np.float64]:
    return picard_ladder(spec, cfg, x_set, seed)[-1]


def picard_replicas(
    spec: PicardSpec,
    cfg: PamConfig,
    replicas: int,
    seed: int,
    *,
    truncate: bool = True,
    fine: PamConfig | None = None,
) -> Iterator[list[NDArray[np.float64]]]:
    """Yields the final-time fields of every level for replicas 0, 1, ...

    With ``fine``, a refinement of the time grid of ``cfg``, each step is driven by the sum of the
    cells the solver on ``fine`` draws for it.
    """
    if fine is not None and (fine.steps % cfg.steps or fine.shape != cfg.shape):
        raise InvalidParametersError("the fine grid must refine the time steps of the Picard grid")
    table = picard_kernels(spec, cfg, truncate)
    for replica in range(replicas):
        yield table.levels(_replica_cells(cfg, seed, replica, fine))


def _mean_and_stderr(samples: Sequence[float]) -> tuple[float, float]:
    values = np.asarray(samples, dtype=float)
    stderr = float(values.std(ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0
    return float(values.mean()), stderr


def picard_decay(spec: PicardSpec, cfg: PamConfig, replicas: int, seed: int) -> list[DecayPoint]:
    """Site-averaged E|u^(ell, j+1) - u^(ell, j)|^2 at time t for j < m."""
    _check_pairing(spec, cfg)
    _check_geometry(spec, cfg)
    gaps: list[list[float]] = [[] for _ in range(spec.m)]
    for levels in picard_replicas(spec, cfg, replicas, seed):
        for j in range(spec.m):
            gaps[j].append(float(np.mean((levels[j + 1] - levels[j]) ** 2)))
    points = []
    for j, samples in enumerate(gaps):
        mean, stderr = _mean_and_stderr(samples)
        points.append(DecayPoint(level=j, mean_square=mean, stderr=stderr))
    return points


def reference_config(cfg: PamConfig) -> PamConfig:
    """The solver configuration the Picard iterates converge to: factor noise with linear increments.

    Its steps divide those of ``cfg`` into the fewest equal substeps meeting the stability bound of
    factor noise, so both time grids stay aligned.
    """
    rate = noise_rate(cfg.params, cfg.torus_side, cfg.grid_n, NoiseModel.FACTOR)
    substeps = max(1, math.ceil(cfg.dt * rate / NOISE_STD_LIMIT**2))
    if substeps > 1:
        logger.debug("Reference steps refined", extra={"substeps": substeps, "dt": cfg.dt})
    return configure_pam(
        cfg.params,
        torus_side=cfg.torus_side,
        grid_n=cfg.grid_n,
        dt=cfg.params.t / (cfg.steps * substeps),
        seed=cfg.seed,
        noise=NoiseModel.FACTOR,
        increment=ItoIncrement.LINEAR,
        noise_scale=1.0,
    )


def coupling_error(spec: PicardSpec, cfg: PamConfig, replicas: int, seed: int) -> tuple[float, float]:
    """Site-averaged E|u_t - u^(ell, m)_t|^2 and its standard error, both driven by the same cells.

    u_t is the solver on ``reference_config(cfg)``; the iterate runs on the steps of ``cfg``.
    """
    _check_pairing(spec, cfg)
    fine = reference_config(cfg)
    reference = simulate_pam(fine, replicas, seed).values
    gaps = [
        float(np.mean((reference[replica] - levels[-1]) ** 2))
        for replica, levels in enumerate(picard_replicas(spec, cfg, replicas, seed, fine=fine))
    ]
    return _mean_and_stderr(gaps)


def independence_range(spec: PicardSpec) -> float:
    """Sup-norm distance 2 m (ell t^{1/alpha} + ell) beyond which two iterates are independent."""
    if not spec.ell > 1.0:
        raise InvalidParametersError(f"ell must exceed 1, got {spec.ell!r}")
    if spec.m < 1:
        raise InvalidParametersError(f"m must be at least 1, got {spec.m!r}")
    return 2.0 * spec.m * spec.reach


def _exponential_mean(log_functional: NDArray[np.float64]) -> tuple[float, float, float]:
    """log of the mean of exp(A), the mean itself and its standard error, computed without overflow."""
    shift = float(log_functional.max())
    weights = np.exp(log_functional - shift)
    mean = float(weights.mean())
    log_value = shift + math.log(mean)
    relative = float(weights.std(ddof=1)) / (mean * math.sqrt(weights.size))
    try:
        value = math.exp(log_value)
    except OverflowError:
        value = math.inf
    return log_value, value, value * relative if math.isfinite(value) else math.inf


def fk_moment(
    k: int,
    params: ModelParams,
    n_paths: int,
    dt_path: float,
    cap: float,
    seed: int,
    *,
    constant_kernel: float | None = None,
) -> MomentEstimate:
    """Estimates E u_t(x)^k = E exp(sum_{i<j} int_0^t f(X^i_s - X^j_s) ds) by Monte Carlo.

    The k stable paths start together; the Riesz kernel is capped at ``cap``, which biases the
    estimate downwards. ``constant_kernel`` replaces f by a constant for diagnostics.
    """
    if k < 2:
        raise InvalidParametersError(f"k must be at least 2, got {k!r}")
    if n_paths < 2:
        raise InvalidParametersError(f"n_paths must be at least 2, got {n_paths!r}")
    if not (dt_path > 0.0 and cap > 0.0):
        raise InvalidParametersError("dt_path and cap must be positive")

    steps = max(1, round(params.t / dt_path))
    dt = params.t / steps
    if constant_kernel is None and cap * dt > CAP_STEP_LIMIT:
        logger.warning("Kernel cap dominates single path steps", extra={"cap": cap, "dt_path": dt})
    pairs = k * (k - 1) // 2
    if constant_kernel is not None:
        log_functional = np.full(n_paths, constant_kernel * pairs * params.t)
    else:
        rng = stream(seed, Stream.FEYNMAN_KAC, k)
        riesz = kernels.riesz_constant(params)
        first, second = np.triu_indices(k, 1)
        positions = np.zeros((n_paths, k, params.d))
        log_functional = np.zeros(n_paths)
        for _ in range(steps):
            positions += kernels.isotropic_stable_increments(params, dt, (n_paths, k), rng)
            distances = np.linalg.norm(positions[:, first] - positions[:, second], axis=-1)
            with np.errstate(divide="ignore"):
                values = riesz * distances ** (-params.beta)
            log_functional += dt * np.minimum(values, cap).sum(axis=1)

    log_value, value, stderr = _exponential_mean(log_functional)
    estimate = MomentEstimate(
        k=k,
        value=value,
        log_value=log_value,
        stderr=stderr,
        n_paths=n_paths,
        dt_path=dt,
        cap=cap,
        t=params.t,
    )
    if estimate.relative_stderr > RELATIVE_STDERR_LIMIT:
        logger.warning(
            "Feynman-Kac estimator variance exploded",
            extra={"k": k, "relative_stderr": estimate.relative_stderr, "n_paths": n_paths},
        )
        warnings.warn(
            f"relative standard error {estimate.relative_stderr:.2f} of the order {k} moment; "
            "raise n_paths or lower t",
            VarianceExplosionWarning,
            stacklevel=2,
        )
    return estimate


def fk_moment_cap_sweep(
    k: int,
    params: ModelParams,
    n_paths: int,
    dt_path: float,
    seed: int,
    caps: Sequence[float] = DEFAULT_CAPS,
) -> list[MomentEstimate]:
    """Same paths for every cap, so the estimates are nondecreasing in the cap."""
    return [fk_moment(k, params, n_paths, dt_path, cap, seed) for cap in sorted(caps)]


def moment_constants(params: ModelParams) -> tuple[float, float]:
    """(c_bar, c_upper) with c_bar = 2^{(3-beta)/alpha} Gamma(beta/alpha) Gamma(1-beta/alpha)."""
    alpha, beta = params.alpha, params.beta
    c_bar = 2.0 ** ((3.0 - beta) / alpha) * float(special.gamma(beta / alpha) * special.gamma(1.0 - beta / alpha))
    return c_bar, 0.5 * (2.0 * c_bar) ** (alpha / (alpha - beta))


def intermittency_fit(estimates: Sequence[MomentEstimate]) -> tuple[float, float]:
    """Fits log log E u^k = q log k + log(prefactor); returns (q, prefactor)."""
    usable = [estimate for estimate in estimates if estimate.log_value > 0.0]
    if len(usable) < 2:
        raise InvalidParametersError("at least two moments with E u^k > 1 are needed")
    fit = stats.linregress(
        np.log([estimate.k for estimate in usable]),
        np.log([estimate.log_value for estimate in usable]),
    )
    return float(fit.slope), float(math.exp(fit.intercept))


def moment_bracket(estimates: Sequence[MomentEstimate], params: ModelParams) -> MomentBracket:
    if not estimates:
        raise InvalidParametersError("no moment estimates to bracket")
    q = params.moment_exponent
    ratios = [estimate.log_value / (params.t * estimate.k**q) for estimate in estimates]
    return MomentBracket(q=q, c_lower=min(ratios), c_upper=max(ratios), t=params.t)


def tail_constants(params: ModelParams, c_lower: float, c_upper: float) -> tuple[float, float]:
    """(c_small, c_big) of the stretched-exponential tail of log u_t from the moment bracket."""
    if not 0.0 < c_lower <= c_upper:
        raise InvalidParametersError(f"need 0 < c_lower <= c_upper, got {c_lower!r}, {c_upper!r}")
    alpha, beta = params.alpha, params.beta
    rho = (alpha - beta) / (2.0 * alpha - beta)
    core = rho ** ((alpha - beta) / alpha) * (1.0 - rho ** ((2.0 * alpha - beta) / (alpha - beta)))
    power = -(alpha - beta) / alpha
    return core * c_upper**power, core * c_lower**power


def localization_schedule(params: ModelParams, n: int, c_upper: float | None = None) -> LocalizationSchedule:
    """Truncation radius, iteration count and moment order used at shell n.

    ell_n = exp(n^{(3 alpha - beta)/(4 alpha - 2 beta)}), m_n = floor(1 + beta log2 ell_n) and
    k_n = floor((beta log ell_n / (4 c t))^{(alpha - beta)/alpha}), at least 2.
    """
    alpha, beta = params.alpha, params.beta
    if n < 1:
        raise InvalidParametersError(f"n must be positive, got {n!r}")
    log_ell = n ** ((3.0 * alpha - beta) / (4.0 * alpha - 2.0 * beta))
    if log_ell > 700.0:
        raise InvalidParametersError(f"ell_{n} overflows a double")
    c_star = moment_constants(params)[1] if c_upper is None else c_upper
    k = math.floor((beta / (4.0 * c_star * params.t) * log_ell) ** ((alpha - beta) / alpha))
    return LocalizationSchedule(
        n=n,
        ell=math.exp(log_ell),
        m=math.floor(1.0 + beta * log_ell / math.log(2.0)),
        k=max(k, 2),
    )


def coupling_bound(
    params: ModelParams,
    ell: float,
    m: int,
    k: int,
    lam: float,
    c_upper: float,
    scale: float = 1.0,
) -> float:
    """C^k k^{k/2} [ell^{-beta k/2} + 2^{-m k/2}] exp(-k log lam + c_upper t k^q), C = scale."""
    log_bound = (
        k * math.log(scale)
        + 0.5 * k * math.log(k)
        + math.log(ell ** (-params.beta * k / 2.0) + 2.0 ** (-m * k / 2.0))
        - k * math.log(lam)
        + c_upper * params.t * k**params.moment_exponent
    )
    try:
        return math.exp(log_bound)
    except OverflowError:
        return math.inf


def pam_limsup_bracket(
    params: ModelParams,
    c_small: float,
    c_big: float,
    d: int | None = None,
) -> tuple[float, float]:
    """Bracket of limsup log u_t(x) / (log |x|)^{alpha/(2 alpha - beta)} from the tail constants."""
    alpha, beta, t = params.alpha, params.beta, params.t
    d = params.d if d is None else d
    time = t ** ((alpha - beta) / (2.0 * alpha - beta))
    power = alpha / (2.0 * alpha - beta)
    return time * (d / c_big) ** power, time * (d / c_small) ** power


def tail_probability(
    params: ModelParams,
    z_grid: ArrayLike,
    replicas: int,
    cfg: PamConfig,
    seed: int,
) -> list[ExceedancePoint]:
    """Empirical P{log u_t(0) >= z} over independent replicas; points with fewer than
    MIN_EXCEEDANCES exceedances are flagged as censored."""
    if cfg.params != params:
        raise InvalidParametersError("the PAM config describes a different model")
    run = simulate_pam(cfg, replicas, seed)
    origin = run.values[(slice(None),) + (0,) * params.d]
    logs = np.full(origin.shape, -np.inf)
    np.log(origin, out=logs, where=origin > 0.0)

    points = []
    for z in np.asarray(z_grid, dtype=float):
        count = int(np.count_nonzero(logs >= z))
        p = count / replicas
        points.append(
            ExceedancePoint(
                z=float(z),
                probability=p,
                stderr=math.sqrt(p * (1.0 - p) / replicas),
                exceedances=count,
                censored=count < MIN_EXCEEDANCES,
            )
        )
    censored = sum(point.censored for point in points)
    if censored:
        logger.warning("Censored tail points", extra={"censored": censored, "replicas": replicas})
    return points
