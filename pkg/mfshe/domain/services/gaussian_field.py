"""Sampling and second-order structure of the stationary solution Z_t of the linear equation."""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Final
from typing import Self

import numpy as np
from numpy.typing import ArrayLike
from numpy.typing import NDArray
from scipy import fft
from scipy import interpolate
from scipy import optimize
from scipy import special
from scipy import stats

from mfshe.domain.entities.field import EquiCorrelatedSpec
from mfshe.domain.entities.field import FieldSample
from mfshe.domain.entities.field import LatticeSpec
from mfshe.domain.entities.field import SlepianProbe
from mfshe.domain.entities.field import TailPoint
from mfshe.domain.entities.model import ModelParams
from mfshe.domain.exceptions import EmbeddingFailureError
from mfshe.domain.exceptions import InvalidParametersError
from mfshe.domain.exceptions import QuadratureNonConvergenceError
from mfshe.domain.services import kernels
from mfshe.domain.services.random import Stream
from mfshe.domain.services.random import stream
from mfshe.domain.types import SamplerScheme

logger = logging.getLogger(__name__)

# Negative circulant eigenvalues down to this fraction of the largest one are clamped to zero.
EMBEDDING_TOLERANCE: Final[float] = 1e-10
MAX_PADDING: Final[int] = 64
# Largest extended lattice the circulant embedding may allocate (complex128, about 256 MiB).
MAX_EMBEDDING_SITES: Final[int] = 2**24
CORRELATION_LENGTH_LEVEL: Final[float] = 0.05
MESH_RESOLUTION: Final[float] = 0.05
MIN_SUP_BOX_REPLICAS: Final[int] = 1000
SPLINE_NODES_PER_DECADE: Final[int] = 48
DIRECT_TABLE_LIMIT: Final[int] = 64
BESSEL_TAIL_INTERVALS: Final[int] = 120
AVERAGING_ROUNDS: Final[int] = 24
FFT_BATCH_SITES: Final[int] = 2**22
DECAY_LAG_SPAN: Final[float] = 1e4


def _angular_average(order: float, z: float) -> float:
    """Average of exp(i xi.x) over the sphere |xi| = r, as a function of z = r |x|."""
    if z == 0.0:
        return 1.0
    return float(special.gamma(order + 1.0) * (2.0 / z) ** order * special.jv(order, z))


def _bessel_breakpoints(order: float, count: int) -> NDArray[np.float64]:
    if order == int(order):
        return special.jn_zeros(int(order), count)
    # McMahon's leading term, exact for half-integer order 1/2.
    return (np.arange(1, count + 1) + order / 2.0 - 0.25) * math.pi


def _accelerate(partial_sums: NDArray[np.float64]) -> float:
    """Repeated averaging of the partial sums of an alternating series."""
    sums = partial_sums[-2 * AVERAGING_ROUNDS :]
    for _ in range(min(AVERAGING_ROUNDS, sums.size - 1)):
        sums = 0.5 * (sums[:-1] + sums[1:])
    return float(sums[-1])


@lru_cache(maxsize=16384)
def radial_covariance(u: float, params: ModelParams) -> float:
    """Cov(Z_t(x), Z_t(y)) for |x - y| = u.

    omega_d int_0^oo T(r) r^{beta-1} A(u r) dr, with T the time integral of exp(-2 s r^alpha) and A the
    spherical average of the plane wave. [0, min(1, 1/u)] carries an algebraic weight for r^{beta-1};
    beyond it d = 1 uses the Fourier-integral rule and d >= 2 sums the Bessel half-waves.
    """
    if u == 0.0:
        return kernels.variance(params)
    alpha, beta, t, d = params.alpha, params.beta, params.t, params.d
    order = d / 2.0 - 1.0
    split = min(1.0, 1.0 / u)

    head = kernels.quad(
        lambda r: kernels.time_factor(r, t, alpha) * _angular_average(order, u * r),
        0.0,
        split,
        weight="alg",
        wvar=(beta - 1.0, 0.0),
    )
    if d == 1:
        tail = kernels.quad(
            lambda r: kernels.time_factor(r, t, alpha) * r ** (beta - 1.0),
            split,
            math.inf,
            weight="cos",
            wvar=u,
        )
        return kernels.sphere_area(d) * (head + tail)

    zeros = _bessel_breakpoints(order, BESSEL_TAIL_INTERVALS + 1) / u
    breakpoints = np.concatenate(([split], zeros[zeros > split]))
    pieces = [
        kernels.quad(
            lambda r: kernels.time_factor(r, t, alpha) * r ** (beta - 1.0) * _angular_average(order, u * r),
            float(a),
            float(b),
        )
        for a, b in zip(breakpoints[:-1], breakpoints[1:], strict=True)
    ]
    tail = _accelerate(np.cumsum(pieces))
    return kernels.sphere_area(d) * (head + tail)


def z_covariance(lag: ArrayLike, params: ModelParams) -> float:
    return radial_covariance(kernels.euclidean_norm(lag, params.d), params)


def z_correlation(lag: ArrayLike, params: ModelParams) -> float:
    return z_covariance(lag, params) / kernels.variance(params)


def radial_correlation(u: float, params: ModelParams) -> float:
    return radial_covariance(u, params) / kernels.variance(params)


def structure_function(lag: ArrayLike, params: ModelParams) -> float:
    """E|Z_t(x + lag) - Z_t(x)|^2."""
    return 2.0 * (kernels.variance(params) - z_covariance(lag, params))


def covariance_table(radii: ArrayLike, params: ModelParams) -> NDArray[np.float64]:
    """Covariance at many radial lags.

    Few distinct lags are integrated one by one; otherwise the covariance is integrated on a
    geometric grid and interpolated by a cubic spline in log-log coordinates.
    """
    radii = np.asarray(radii, dtype=float)
    unique, inverse = np.unique(radii.ravel(), return_inverse=True)
    if unique.size <= DIRECT_TABLE_LIMIT:
        values = np.array([radial_covariance(float(u), params) for u in unique])
        return values[inverse].reshape(radii.shape)

    positive = unique[unique > 0.0]
    decades = math.log10(positive[-1] / positive[0])
    count = max(DIRECT_TABLE_LIMIT, math.ceil(decades * SPLINE_NODES_PER_DECADE))
    nodes = np.geomspace(positive[0], positive[-1], count)
    node_values = np.array([radial_covariance(float(u), params) for u in nodes])

    values = np.full(unique.shape, kernels.variance(params))
    if np.all(node_values > 0.0):
        spline = interpolate.CubicSpline(np.log(nodes), np.log(node_values))
        values[unique > 0.0] = np.exp(spline(np.log(positive)))
    else:
        spline = interpolate.CubicSpline(nodes, node_values)
        values[unique > 0.0] = spline(positive)
    return values[inverse].reshape(radii.shape)


@lru_cache(maxsize=64)
def correlation_decay_constant(params: ModelParams) -> float:
    """c3 = max of Corr(u) u^beta over u in [2 t^{1/alpha}, 2 t^{1/alpha} * DECAY_LAG_SPAN]."""
    start = 2.0 * params.time_scale
    lags = np.geomspace(start, start * DECAY_LAG_SPAN, 41)
    return max(radial_correlation(float(u), params) * u**params.beta for u in lags)


@lru_cache(maxsize=64)
def correlation_length(params: ModelParams) -> float:
    """Lag at which the correlation falls to CORRELATION_LENGTH_LEVEL."""
    lower, upper = 0.0, params.time_scale
    for _ in range(200):
        if radial_correlation(upper, params) < CORRELATION_LENGTH_LEVEL:
            break
        lower, upper = upper, 2.0 * upper
    else:
        raise QuadratureNonConvergenceError("the correlation never fell below the correlation-length level")
    return float(
        optimize.brentq(lambda u: radial_correlation(u, params) - CORRELATION_LENGTH_LEVEL, lower, upper, rtol=1e-8)
    )


def cross_block_bound(params: ModelParams, block: int, spacing: float) -> float:
    return correlation_decay_constant(params) * (block * spacing) ** (-params.beta)


def loglog_slope(x: ArrayLike, y: ArrayLike) -> float:
    return float(stats.linregress(np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))).slope)


@dataclass(frozen=True, kw_only=True, eq=False)
class CirculantSampler:
    """Gaussian lattice sampler driven by the eigenvalues of a circulant covariance.

    ``eigenvalues`` live on the extended lattice; draws are the leading ``shape`` window of
    Re and Im of fftn(sqrt(eigenvalues / M) (e1 + i e2)), which are independent with the circulant
    covariance. ``nugget`` adds independent per-site variance.
    """

    shape: tuple[int, ...]
    extended_shape: tuple[int, ...]
    eigenvalues: NDArray[np.float64]
    padding: int
    nugget: float = 0.0

    @property
    def extended_size(self) -> int:
        return math.prod(self.extended_shape)

    @classmethod
    def embed(cls, shape: tuple[int, ...], spacing: float, params: ModelParams) -> Self:
        """Circulant embedding of the covariance of Z_t on the lattice ``shape`` with ``spacing``.

        Raises:
            EmbeddingFailureError: if the spectrum stays negative up to MAX_PADDING or the extended
                lattice would exceed MAX_EMBEDDING_SITES.
        """
        padding = 2
        while padding <= MAX_PADDING:
            extended = tuple(2 * fft.next_fast_len(math.ceil(padding * n / 2)) for n in shape)
            if math.prod(extended) > MAX_EMBEDDING_SITES:
                break
            row = covariance_table(kernels.torus_offsets(extended, spacing), params)
            eigenvalues = fft.fftn(row).real
            if eigenvalues.min() >= -EMBEDDING_TOLERANCE * eigenvalues.max():
                logger.debug("Circulant embedding accepted", extra={"shape": shape, "extended": extended})
                return cls(
                    shape=shape,
                    extended_shape=extended,
                    eigenvalues=np.clip(eigenvalues, 0.0, None),
                    padding=padding,
                )
            logger.warning(
                "Circulant spectrum has negative entries, doubling padding",
                extra={"padding": padding, "min_eigenvalue": float(eigenvalues.min())},
            )
            padding *= 2
        raise EmbeddingFailureError(
            f"no nonnegative circulant embedding for shape {shape} up to padding {MAX_PADDING} "
            f"and {MAX_EMBEDDING_SITES} sites; use the spectral-torus or block-independent scheme"
        )

    @classmethod
    def spectral_torus(cls, shape: tuple[int, ...], spacing: float, params: ModelParams, padding: int = 2) -> Self:
        """Sampler of Z_t on a periodic cube of side padding * max(shape) * spacing.

        The truncated Fourier series misses the variance above the lattice Nyquist frequency; it is
        restored as a nugget so the one-point law is exact.
        """
        if padding < 1:
            raise InvalidParametersError(f"padding must be a positive integer, got {padding!r}")
        sites = padding * max(shape)
        extended = (sites,) * len(shape)
        side = sites * spacing
        weights = kernels.torus_weights(extended, side, params)
        spectrum = kernels.time_factors(kernels.torus_frequencies(extended, side), params.t, params.alpha) * weights
        nugget = max(kernels.variance(params) - float(spectrum.sum()), 0.0)
        logger.debug("Spectral torus built", extra={"sites": sites, "side": side, "nugget": nugget})
        return cls(
            shape=shape,
            extended_shape=extended,
            eigenvalues=spectrum * math.prod(extended),
            padding=padding,
            nugget=nugget,
        )

    def sample(self, rng: np.random.Generator, count: int = 1) -> NDArray[np.float64]:
        """``count`` draws of shape (count, *shape)."""
        pairs = -(-count // 2)
        amplitude = np.sqrt(self.eigenvalues / self.extended_size)
        per_batch = max(1, FFT_BATCH_SITES // self.extended_size)
        window = tuple(slice(0, n) for n in self.shape)
        axes = tuple(range(1, len(self.shape) + 1))

        draws = []
        for start in range(0, pairs, per_batch):
            batch = min(per_batch, pairs - start)
            noise = rng.standard_normal((batch, 2, *self.extended_shape))
            transformed = fft.fftn(amplitude * (noise[:, 0] + 1j * noise[:, 1]), axes=axes)
            cut = transformed[(slice(None), *window)]
            draws.append(np.stack([cut.real, cut.imag], axis=1).reshape(2 * batch, *self.shape))
        values = np.concatenate(draws)[:count]
        if self.nugget > 0.0:
            values = values + math.sqrt(self.nugget) * rng.standard_normal(values.shape)
        return values


@lru_cache(maxsize=16)
def circulant_sampler(shape: tuple[int, ...], spacing: float, params: ModelParams) -> CirculantSampler:
    return CirculantSampler.embed(shape, spacing, params)


@lru_cache(maxsize=16)
def torus_sampler(shape: tuple[int, ...], spacing: float, params: ModelParams, padding: int = 2) -> CirculantSampler:
    return CirculantSampler.spectral_torus(shape, spacing, params, padding)


def _require_exact_dimension(lattice: LatticeSpec) -> None:
    if lattice.d > 2:
        raise InvalidParametersError(f"exact sampling is offered for d in {{1, 2}}, got d = {lattice.d}")


def _require_block_scale(lattice: LatticeSpec, params: ModelParams, block: int) -> None:
    if block < 1:
        raise InvalidParametersError(f"block must be a positive integer, got {block!r}")
    if not block * lattice.spacing > 2.0 * params.time_scale:
        raise InvalidParametersError(
            f"block side {block * lattice.spacing} must exceed twice the diffusive length {params.time_scale}"
        )


def _block_replicas(
    lattice: LatticeSpec,
    params: ModelParams,
    seed: int,
    replicas: int,
    block: int,
) -> NDArray[np.float64]:
    values = np.empty((replicas, *lattice.shape))
    counts = [math.ceil(n / block) for n in lattice.shape]
    for key, index in enumerate(np.ndindex(*counts)):
        window = tuple(slice(i * block, min((i + 1) * block, n)) for i, n in zip(index, lattice.shape, strict=True))
        block_shape = tuple(s.stop - s.start for s in window)
        sampler = circulant_sampler(block_shape, lattice.spacing, params)
        values[(slice(None), *window)] = sampler.sample(stream(seed, Stream.BLOCK, key), replicas)
    return values


def field_replicas(
    lattice: LatticeSpec,
    params: ModelParams,
    seed: int,
    replicas: int,
    *,
    scheme: SamplerScheme = SamplerScheme.CIRCULANT_EXACT,
    block: int | None = None,
    padding: int = 2,
) -> NDArray[np.float64]:
    """``replicas`` independent realizations on ``lattice``, shape (replicas, *lattice.shape).

    The first replica coincides with the single sample of the same scheme and seed.
    """
    if lattice.d != params.d:
        raise InvalidParametersError(f"lattice dimension {lattice.d} differs from model dimension {params.d}")
    if replicas < 1:
        raise InvalidParametersError(f"replicas must be positive, got {replicas!r}")

    match scheme:
        case SamplerScheme.CIRCULANT_EXACT:
            _require_exact_dimension(lattice)
            sampler = circulant_sampler(lattice.shape, lattice.spacing, params)
            return sampler.sample(stream(seed, Stream.EXACT), replicas)
        case SamplerScheme.SPECTRAL_TORUS:
            sampler = torus_sampler(lattice.shape, lattice.spacing, params, padding)
            return sampler.sample(stream(seed, Stream.SPECTRAL_TORUS), replicas)
        case SamplerScheme.BLOCK_INDEPENDENT:
            if block is None:
                raise InvalidParametersError("the block-independent scheme needs a block size")
            _require_exact_dimension(lattice)
            _require_block_scale(lattice, params, block)
            return _block_replicas(lattice, params, seed, replicas, block)
        case SamplerScheme.IID_SURROGATE:
            deviation = math.sqrt(kernels.variance(params))
            return deviation * stream(seed, Stream.IID).standard_normal((replicas, *lattice.shape))


def sample_field_exact(lattice: LatticeSpec, params: ModelParams, seed: int) -> FieldSample:
    values = field_replicas(lattice, params, seed, 1)[0]
    sampler = circulant_sampler(lattice.shape, lattice.spacing, params)
    return FieldSample(
        lattice=lattice,
        values=values,
        params=params,
        seed=seed,
        scheme=SamplerScheme.CIRCULANT_EXACT,
        metadata={"padding": sampler.padding, "extended_shape": list(sampler.extended_shape)},
    )


def sample_field_block_independent(lattice: LatticeSpec, params: ModelParams, block: int, seed: int) -> FieldSample:
    values = field_replicas(lattice, params, seed, 1, scheme=SamplerScheme.BLOCK_INDEPENDENT, block=block)[0]
    bound = cross_block_bound(params, block, lattice.spacing)
    logger.debug("Block-independent sample drawn", extra={"block": block, "cross_block_bound": bound})
    return FieldSample(
        lattice=lattice,
        values=values,
        params=params,
        seed=seed,
        scheme=SamplerScheme.BLOCK_INDEPENDENT,
        metadata={"block": block, "cross_block_bound": bound},
    )


def sample_field_spectral_torus(lattice: LatticeSpec, params: ModelParams, seed: int, padding: int = 2) -> FieldSample:
    values = field_replicas(lattice, params, seed, 1, scheme=SamplerScheme.SPECTRAL_TORUS, padding=padding)[0]
    sampler = torus_sampler(lattice.shape, lattice.spacing, params, padding)
    return FieldSample(
        lattice=lattice,
        values=values,
        params=params,
        seed=seed,
        scheme=SamplerScheme.SPECTRAL_TORUS,
        metadata={"padding": padding, "nugget": sampler.nugget},
    )


def iid_surrogate(lattice: LatticeSpec, params: ModelParams, seed: int) -> FieldSample:
    values = field_replicas(lattice, params, seed, 1, scheme=SamplerScheme.IID_SURROGATE)[0]
    return FieldSample(
        lattice=lattice,
        values=values,
        params=params,
        seed=seed,
        scheme=SamplerScheme.IID_SURROGATE,
    )


def sample_field(
    lattice: LatticeSpec,
    params: ModelParams,
    seed: int,
    *,
    scheme: SamplerScheme,
    block: int | None = None,
    padding: int = 2,
) -> FieldSample:
    match scheme:
        case SamplerScheme.CIRCULANT_EXACT:
            return sample_field_exact(lattice, params, seed)
        case SamplerScheme.BLOCK_INDEPENDENT:
            if block is None:
                raise InvalidParametersError("the block-independent scheme needs a block size")
            return sample_field_block_independent(lattice, params, block, seed)
        case SamplerScheme.SPECTRAL_TORUS:
            return sample_field_spectral_torus(lattice, params, seed, padding)
        case SamplerScheme.IID_SURROGATE:
            return iid_surrogate(lattice, params, seed)


def empirical_structure_function(samples: ArrayLike, lags: ArrayLike) -> NDArray[np.float64]:
    """Mean of (Z(x + h e_1) - Z(x))^2 over replicas and sites, for integer site lags h along axis 1."""
    samples = np.asarray(samples, dtype=float)
    return np.array([np.mean((samples[:, h:] - samples[:, :-h]) ** 2) for h in np.asarray(lags, dtype=int)])


def empirical_covariance(samples: ArrayLike, lags: ArrayLike) -> NDArray[np.float64]:
    """Mean of Z(x) Z(x + h e_1) over replicas and sites, for integer site lags h >= 0 along axis 1."""
    samples = np.asarray(samples, dtype=float)
    values = []
    for h in np.asarray(lags, dtype=int):
        values.append(np.mean(samples**2) if h == 0 else np.mean(samples[:, h:] * samples[:, :-h]))
    return np.array(values)


def sample_equicorrelated_batch(spec: EquiCorrelatedSpec, seed: int, replicas: int) -> NDArray[np.float64]:
    """Z_i = Y + U_i with Y ~ N(0, r) shared and U_i ~ N(0, 1 - r) independent, shape (replicas, m)."""
    rng = stream(seed, Stream.EQUICORRELATED)
    common = math.sqrt(spec.r) * rng.standard_normal((replicas, 1))
    own = math.sqrt(1.0 - spec.r) * rng.standard_normal((replicas, spec.m))
    return common + own


def sample_equicorrelated(spec: EquiCorrelatedSpec, seed: int) -> NDArray[np.float64]:
    return sample_equicorrelated_batch(spec, seed, 1)[0]


def berman_max_bound(n: float, gamma: float, r: float, m: int) -> float:
    """Upper bound (P{U <= sqrt(2 gamma n + 2)})^m + P{Y >= 1 / sqrt(9 gamma n)} on P{max Z_i <= sqrt(2 gamma n)}.

    Y ~ N(0, r) and U ~ N(0, 1 - r) are the factors of the equi-correlated decomposition.
    """
    if not (n > 0.0 and gamma > 0.0):
        raise InvalidParametersError("n and gamma must be positive")
    EquiCorrelatedSpec(m=m, r=r)
    level = math.sqrt(2.0 * gamma * n + 2.0)
    independent = math.exp(m * float(stats.norm.logcdf(level / math.sqrt(1.0 - r))))
    common = float(stats.norm.sf(1.0 / math.sqrt(9.0 * gamma * n) / math.sqrt(r))) if r > 0.0 else 0.0
    return independent + common


def slepian_probe(
    params: ModelParams,
    spacing: float,
    m: int,
    lam: float,
    replicas: int,
    seed: int,
) -> SlepianProbe:
    """Estimates P{max <= lam} for m normalized field points on a line and for m equi-correlated normals.

    The equi-correlated variables use r equal to the largest correlation among the field points,
    which is the ordering under which the first probability dominates the second.
    """
    lattice = LatticeSpec(d=params.d, origin=(0.0,) * params.d, spacing=spacing, shape=(m,) + (1,) * (params.d - 1))
    points = field_replicas(lattice, params, seed, replicas).reshape(replicas, m)
    points /= math.sqrt(kernels.variance(params))
    correlation = max(radial_correlation(h * spacing, params) for h in range(1, m)) if m > 1 else 0.0
    correlation = min(max(correlation, 0.0), 1.0 - 1e-12)
    equicorrelated = sample_equicorrelated_batch(EquiCorrelatedSpec(m=m, r=correlation), seed, replicas)

    p_equi = float(np.mean(equicorrelated.max(axis=1) <= lam))
    p_field = float(np.mean(points.max(axis=1) <= lam))
    return SlepianProbe(
        lam=lam,
        correlation=correlation,
        equicorrelated=p_equi,
        equicorrelated_stderr=math.sqrt(p_equi * (1.0 - p_equi) / replicas),
        field_points=p_field,
        field_points_stderr=math.sqrt(p_field * (1.0 - p_field) / replicas),
    )


def sup_box_tail(
    params: ModelParams,
    box_side: float,
    lambda_grid: ArrayLike,
    replicas: int,
    mesh: float,
    seed: int,
) -> list[TailPoint]:
    """P{sup of Z_t / sd over the meshed cube [0, box_side]^d > lam} for every lam of the grid.

    The sup is taken over mesh points only, so every estimate is biased low.
    """
    if replicas < MIN_SUP_BOX_REPLICAS:
        raise InvalidParametersError(f"at least {MIN_SUP_BOX_REPLICAS} replicas are needed, got {replicas}")
    if not mesh > 0.0:
        raise InvalidParametersError(f"mesh must be positive, got {mesh!r}")
    length = correlation_length(params)
    if mesh > MESH_RESOLUTION * length:
        raise InvalidParametersError(f"mesh {mesh} does not resolve the correlation length {length}")

    sites = round(box_side / mesh) + 1
    shape = (sites,) * params.d
    if params.d <= 2:
        sampler = circulant_sampler(shape, mesh, params)
    else:
        sampler = torus_sampler(shape, mesh, params)
    rng = stream(seed, Stream.SUP_BOX)

    maxima = np.empty(replicas)
    chunk = 2 * max(1, FFT_BATCH_SITES // sampler.extended_size)
    for start in range(0, replicas, chunk):
        count = min(chunk, replicas - start)
        maxima[start : start + count] = sampler.sample(rng, count).reshape(count, -1).max(axis=1)
    maxima /= math.sqrt(kernels.variance(params))

    levels = np.asarray(lambda_grid, dtype=float)
    probabilities = (maxima[np.newaxis, :] > levels[:, np.newaxis]).mean(axis=1)
    logger.info("Sup-over-box tail estimated", extra={"sites": sites, "replicas": replicas})
    return [
        TailPoint(lam=float(lam), probability=float(p), stderr=math.sqrt(p * (1.0 - p) / replicas))
        for lam, p in zip(levels, probabilities, strict=True)
    ]
