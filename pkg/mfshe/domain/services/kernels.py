"""Deterministic functions and constants of the model.

Fourier convention, fixed for the whole package: the forward transform is
``f^(xi) = int f(x) exp(-i xi.x) dx`` and the inverse carries the factor ``(2 pi)^{-d}``.
The noise covariance is ``f(z) = c_{beta,d} |z|^{-beta}``, whose transform is
``(2 pi)^d |xi|^{beta-d}``; equivalently the noise spectral measure has density ``|xi|^{beta-d}``
with respect to ``d xi``. With this convention

    Var Z_t = int_0^t int exp(-2 s |xi|^alpha) |xi|^{beta-d} d xi ds.
"""

import logging
import math
from collections.abc import Callable
from functools import lru_cache
from typing import Any
from typing import Final

import numpy as np
from numpy.typing import ArrayLike
from numpy.typing import NDArray
from scipy import integrate
from scipy import special

from mfshe.domain.entities.model import KernelFactorization
from mfshe.domain.entities.model import ModelParams
from mfshe.domain.entities.model import VarianceConstantReport
from mfshe.domain.exceptions import InvalidParametersError
from mfshe.domain.exceptions import QuadratureNonConvergenceError
from mfshe.domain.exceptions import SingularInputError

logger = logging.getLogger(__name__)

QUAD_EPSABS: Final[float] = 1e-12
QUAD_EPSREL: Final[float] = 1e-9
QUAD_LIMIT: Final[int] = 1000
# Tolerated error, relative to the requested one, when QUADPACK flags a roundoff condition.
QUAD_SLACK: Final[float] = 100.0
# The inversion integrand exp(-s r^alpha) is cut where it falls below this level.
DENSITY_CUTOFF: Final[float] = 1e-12


def euclidean_norm(point: ArrayLike, d: int) -> float:
    """Norm of a single point given as d coordinates (or a scalar when d = 1)."""
    coordinates = np.asarray(point, dtype=float)
    if coordinates.ndim == 0:
        if d != 1:
            raise InvalidParametersError(f"a scalar is only a point when d = 1, got d = {d}")
        return abs(float(coordinates))
    if coordinates.shape != (d,):
        raise InvalidParametersError(f"expected a point with {d} coordinates, got shape {coordinates.shape}")
    return float(np.linalg.norm(coordinates))


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere in R^d."""
    return 2.0 * math.pi ** (d / 2.0) / float(special.gamma(d / 2.0))


def quad(func: Callable[[float], float], a: float, b: float, **kwargs: Any) -> float:
    """Adaptive QUADPACK integral that raises instead of warning.

    Raises:
        QuadratureNonConvergenceError: if QUADPACK reports a failure whose error estimate exceeds
            the requested tolerance by more than QUAD_SLACK, or if the value is not finite.
    """
    epsabs = kwargs.pop("epsabs", QUAD_EPSABS)
    epsrel = kwargs.pop("epsrel", QUAD_EPSREL)
    kwargs.setdefault("limit", QUAD_LIMIT)
    try:
        result = integrate.quad(func, a, b, epsabs=epsabs, epsrel=epsrel, full_output=1, **kwargs)
    except ValueError as e:
        raise QuadratureNonConvergenceError(str(e)) from e

    value, abserr = float(result[0]), float(result[1])
    if not math.isfinite(value):
        raise QuadratureNonConvergenceError("quadrature returned a non finite value", abserr=abserr)
    if len(result) > 3:
        tolerance = QUAD_SLACK * max(epsabs, epsrel * abs(value))
        if not abserr <= tolerance:
            raise QuadratureNonConvergenceError(str(result[3]), abserr=abserr)
        logger.debug("Quadrature accepted within slack", extra={"abserr": abserr, "value": value})
    return value


def levy_exponent(xi: ArrayLike, params: ModelParams) -> float:
    return euclidean_norm(xi, params.d) ** params.alpha


def stable_density(x: ArrayLike, s: float, params: ModelParams) -> float:
    """Transition density p_s(x) of the isotropic alpha-stable process with exponent |xi|^alpha.

    Closed forms are used for alpha = 2 (Gaussian) and alpha = 1 (Cauchy); other exponents go
    through the radial Fourier inversion of exp(-s r^alpha).

    Raises:
        QuadratureNonConvergenceError: if the inversion integral misses its tolerance.
    """
    if not s > 0.0:
        raise InvalidParametersError(f"time s must be positive, got {s!r}")
    radius = euclidean_norm(x, params.d)
    d = params.d
    if params.alpha == 2.0:
        return (4.0 * math.pi * s) ** (-d / 2.0) * math.exp(-(radius**2) / (4.0 * s))
    if params.alpha == 1.0:
        constant = float(special.gamma((d + 1) / 2.0)) / math.pi ** ((d + 1) / 2.0)
        return constant * s / (s**2 + radius**2) ** ((d + 1) / 2.0)
    return _stable_density_inversion(radius, s, params.alpha, d)


def _stable_density_inversion(radius: float, s: float, alpha: float, d: int) -> float:
    r_max = (math.log(1.0 / DENSITY_CUTOFF) / s) ** (1.0 / alpha)

    if radius == 0.0:
        mass = quad(lambda q: math.exp(-s * q**alpha) * q ** (d - 1), 0.0, r_max)
        return sphere_area(d) * mass / (2.0 * math.pi) ** d

    if d == 1:
        value = quad(lambda q: math.exp(-s * q**alpha), 0.0, r_max, weight="cos", wvar=radius)
        return value / math.pi

    order = d / 2.0 - 1.0
    value = quad(
        lambda q: math.exp(-s * q**alpha) * q ** (d / 2.0) * float(special.jv(order, q * radius)),
        0.0,
        r_max,
    )
    return (2.0 * math.pi) ** (-d / 2.0) * radius ** (-order) * value


def density_envelope_constants(
    params: ModelParams,
    s_grid: ArrayLike,
    radii: ArrayLike,
) -> tuple[float, float]:
    """Measures c1, c2 with c1 E <= p_s(x) <= c2 E for E = min(s^{-d/alpha}, s / |x|^{d+alpha}).

    Points are taken along the first axis at the given radii.
    """
    d = params.d
    ratios = []
    for s in np.asarray(s_grid, dtype=float):
        for radius in np.asarray(radii, dtype=float):
            point = np.zeros(d)
            point[0] = radius
            envelope = s ** (-d / params.alpha)
            if radius > 0.0:
                envelope = min(envelope, s / radius ** (d + params.alpha))
            ratios.append(stable_density(point, float(s), params) / envelope)
    return float(min(ratios)), float(max(ratios))


def riesz_constant(params: ModelParams) -> float:
    """c_{beta,d} = 2^beta pi^{d/2} Gamma(beta/2) / Gamma((d-beta)/2)."""
    beta, d = params.beta, params.d
    return float(2.0**beta * math.pi ** (d / 2.0) * special.gamma(beta / 2.0) / special.gamma((d - beta) / 2.0))


def riesz_fourier_constant(gamma: float, d: int) -> float:
    """K with (|x|^{-gamma})^ = K |xi|^{gamma-d} in R^d, valid for 0 < gamma < d."""
    if not 0.0 < gamma < d:
        raise InvalidParametersError(f"gamma must lie in (0, {d}), got {gamma!r}")
    return float(
        math.pi ** (d / 2.0) * 2.0 ** (d - gamma) * special.gamma((d - gamma) / 2.0) / special.gamma(gamma / 2.0)
    )


def riesz_kernel(z: ArrayLike, params: ModelParams) -> float:
    radius = euclidean_norm(z, params.d)
    if radius == 0.0:
        raise SingularInputError("the Riesz kernel is singular at z = 0")
    return riesz_constant(params) * radius ** (-params.beta)


def factorize(params: ModelParams, cutoff: float = math.inf) -> KernelFactorization:
    riesz = riesz_constant(params)
    exponent = (params.d + params.beta) / 2.0
    coupling = math.sqrt(riesz * riesz_fourier_constant(params.beta, params.d))
    coupling /= riesz_fourier_constant(exponent, params.d)
    return KernelFactorization(
        params=params,
        cutoff=cutoff,
        amplitude=math.sqrt(riesz),
        coupling_amplitude=coupling,
    )


def torus_offsets(shape: tuple[int, ...], spacing: float) -> NDArray[np.float64]:
    """Minimum-image distance of every torus site to the origin site."""
    axes = [np.fft.fftfreq(n, d=1.0 / n) * spacing for n in shape]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.sqrt(sum(grid**2 for grid in grids))


def factor_grid(
    factorization: KernelFactorization,
    shape: tuple[int, ...],
    spacing: float,
) -> NDArray[np.float64]:
    """Coupled factor h_ell sampled at the torus offsets, origin cell replaced by its cell average."""
    radii = torus_offsets(shape, spacing)
    exponent = factorization.exponent
    inside = (radii > 0.0) & (radii <= factorization.cutoff)
    values = np.zeros_like(radii)
    values[inside] = factorization.coupling_amplitude * radii[inside] ** (-exponent)
    values[(0,) * len(shape)] = factorization.origin_cell_average(spacing)
    return values


def torus_frequencies(shape: tuple[int, ...], side: float) -> NDArray[np.float64]:
    """Norms |xi_k| of the torus frequencies 2 pi k / side, in FFT order."""
    axes = [2.0 * math.pi * np.fft.fftfreq(n, d=1.0 / n) / side for n in shape]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.sqrt(sum(grid**2 for grid in grids))


def torus_weights(shape: tuple[int, ...], side: float, params: ModelParams) -> NDArray[np.float64]:
    """Spectral weights w_k of the noise on the torus of side ``side``.

    w_k = |xi_k|^{beta-d} (2 pi / side)^d away from zero; the zero mode carries the mass of the ball
    |xi| <= pi / side, that is omega_d (pi / side)^beta / beta.
    """
    d, beta = params.d, params.beta
    radii = torus_frequencies(shape, side)
    weights = np.zeros_like(radii)
    nonzero = radii > 0.0
    weights[nonzero] = radii[nonzero] ** (beta - d) * (2.0 * math.pi / side) ** d
    weights[(0,) * len(shape)] = sphere_area(d) * (math.pi / side) ** beta / beta
    return weights


def time_factor(radius: float, t: float, alpha: float) -> float:
    """int_0^t exp(-2 s r^alpha) ds, continuous at r = 0."""
    if radius == 0.0:
        return t
    power = radius**alpha
    return -math.expm1(-2.0 * t * power) / (2.0 * power)


def time_factors(radii: NDArray[np.float64], t: float, alpha: float) -> NDArray[np.float64]:
    radii = np.asarray(radii, dtype=float)
    power = radii**alpha
    with np.errstate(divide="ignore", invalid="ignore"):
        values = -np.expm1(-2.0 * t * power) / (2.0 * power)
    return np.where(radii > 0.0, values, t)


def z_spectral_density(r: float, params: ModelParams) -> float:
    """S(r) = (1 - exp(-2 t r^alpha)) r^{beta-d-alpha} / 2, the time-integrated spectral density of Z_t.

    Raises:
        SingularInputError: at r = 0, where the radial quadratures take over.
    """
    if r < 0.0:
        raise InvalidParametersError(f"radial frequency must be nonnegative, got {r!r}")
    if r == 0.0:
        raise SingularInputError("S(r) is singular at r = 0")
    return time_factor(r, params.t, params.alpha) * r ** (params.beta - params.d)


@lru_cache(maxsize=256)
def variance_constant(params: ModelParams) -> float:
    """Prefactor of Var Z_t = variance_constant * t^{(alpha-beta)/alpha}, by radial quadrature.

    The radial integrand r^{beta-1} (1 - exp(-2 r^alpha)) / (2 r^alpha) is integrated with an
    algebraic weight on [0, 1]; on [1, oo) the power-law part is integrated in closed form.
    """
    alpha, beta = params.alpha, params.beta
    head = quad(lambda r: time_factor(r, 1.0, alpha), 0.0, 1.0, weight="alg", wvar=(beta - 1.0, 0.0))
    tail = quad(lambda r: math.exp(-2.0 * r**alpha) * r ** (beta - alpha - 1.0) / 2.0, 1.0, math.inf)
    return sphere_area(params.d) * (head + 1.0 / (2.0 * (alpha - beta)) - tail)


def closed_form_variance_constant(params: ModelParams) -> float:
    alpha, beta = params.alpha, params.beta
    return sphere_area(params.d) * float(special.gamma(beta / alpha)) / ((alpha - beta) * 2.0 ** (beta / alpha))


def printed_variance_constant(params: ModelParams) -> float:
    """c_{beta,d} Gamma(beta/alpha) / ((alpha-beta) 2^{beta/alpha}), the constant as usually printed."""
    alpha, beta = params.alpha, params.beta
    return riesz_constant(params) * float(special.gamma(beta / alpha)) / ((alpha - beta) * 2.0 ** (beta / alpha))


def variance_constant_report(params: ModelParams) -> VarianceConstantReport:
    return VarianceConstantReport(
        quadrature=variance_constant(params),
        closed_form=closed_form_variance_constant(params),
        printed=printed_variance_constant(params),
    )


def variance(params: ModelParams) -> float:
    return variance_constant(params) * params.t**params.time_exponent


def sample_stable(alpha: float, size: int | tuple[int, ...], rng: np.random.Generator) -> NDArray[np.float64]:
    """Symmetric alpha-stable draws with characteristic function exp(-|xi|^alpha).

    Chambers-Mallows-Stuck representation from a uniform angle and a unit exponential.
    """
    phi = rng.uniform(-math.pi / 2.0, math.pi / 2.0, size)
    w = rng.standard_exponential(size)
    if alpha == 2.0:
        return 2.0 * np.sqrt(w) * np.sin(phi)
    if alpha == 1.0:
        return np.tan(phi)
    return (
        np.sin(alpha * phi)
        / np.cos(phi) ** (1.0 / alpha)
        * (np.cos((1.0 - alpha) * phi) / w) ** ((1.0 - alpha) / alpha)
    )


def sample_stable_subordinator(a: float, size: int | tuple[int, ...], rng: np.random.Generator) -> NDArray[np.float64]:
    """Positive a-stable draws with Laplace transform exp(-lambda^a), 0 < a <= 1 (Kanter)."""
    if a == 1.0:
        return np.ones(size)
    theta = rng.uniform(0.0, math.pi, size)
    w = rng.standard_exponential(size)
    zolotarev = (np.sin(a * theta) ** a * np.sin((1.0 - a) * theta) ** (1.0 - a) / np.sin(theta)) ** (1.0 / (1.0 - a))
    return (zolotarev / w) ** ((1.0 - a) / a)


def isotropic_stable_increments(
    params: ModelParams,
    dt: float,
    size: int | tuple[int, ...],
    rng: np.random.Generator,
) -> NDArray[np.float64]:
    """Increments X with E exp(i xi.X) = exp(-dt |xi|^alpha), shape (*size, d).

    d = 1 samples the symmetric stable law directly; d >= 2 subordinates a Brownian motion with
    generator Laplacian by an alpha/2-stable subordinator.
    """
    shape = (size,) if isinstance(size, int) else tuple(size)
    alpha = params.alpha
    if params.d == 1:
        return (dt ** (1.0 / alpha) * sample_stable(alpha, shape, rng))[..., np.newaxis]
    clock = dt ** (2.0 / alpha) * sample_stable_subordinator(alpha / 2.0, shape, rng)
    gaussian = rng.standard_normal((*shape, params.d))
    return np.sqrt(2.0 * clock)[..., np.newaxis] * gaussian
