"""Per-shell sampling and fitting shared by the experiments and by run verification.

Shell n is represented by the integer points of [e^{n-1}, e^n)^d, on which the linear field is
sampled directly and the parabolic Anderson model on a periodic patch around them.
"""

import logging
import math
from collections.abc import Sequence
from typing import Final

import numpy as np
from numpy.typing import NDArray

from mfshe.domain.entities.field import FieldSample
from mfshe.domain.entities.field import LatticeSpec
from mfshe.domain.entities.fractal import CoverReport
from mfshe.domain.entities.fractal import DimensionEstimate
from mfshe.domain.entities.fractal import PeakSet
from mfshe.domain.entities.model import ModelParams
from mfshe.domain.entities.pam import PamConfig
from mfshe.domain.exceptions import InsufficientShellsError
from mfshe.domain.services import fractal
from mfshe.domain.services import gaussian_field
from mfshe.domain.services import pam
from mfshe.domain.types import CoverScheme
from mfshe.domain.types import ItoIncrement
from mfshe.domain.types import NoiseModel
from mfshe.domain.types import SamplerScheme

logger = logging.getLogger(__name__)

BLOCK_SITE_LIMIT: Final[int] = 2**20


def choose_block(params: ModelParams, tolerance: float, axis_sites: int) -> int:
    """Smallest unit-spacing block whose cross-block correlation bound is below ``tolerance``.

    The block is capped by the lattice axis and by BLOCK_SITE_LIMIT sites; a capped block whose
    bound stays above the tolerance is logged.
    """
    c3 = gaussian_field.correlation_decay_constant(params)
    wanted = max(math.floor(2.0 * params.time_scale) + 1, math.ceil((c3 / tolerance) ** (1.0 / params.beta)))
    cap = math.floor(BLOCK_SITE_LIMIT ** (1.0 / params.d))
    block = min(wanted, axis_sites, cap)
    block = max(block, math.floor(2.0 * params.time_scale) + 1)
    bound = gaussian_field.cross_block_bound(params, block, 1.0)
    if block < axis_sites and bound >= tolerance:
        logger.warning("Cross-block bound above tolerance", extra={"block": block, "bound": bound})
    return block


def shell_field(
    params: ModelParams,
    n: int,
    seed: int,
    *,
    scheme: SamplerScheme,
    block: int | None = None,
    tolerance: float = 0.01,
    padding: int = 2,
) -> FieldSample:
    """One realization of Z_t on the orthant part of shell n."""
    lattice = fractal.orthant_lattice(n, params.d)
    if scheme is SamplerScheme.BLOCK_INDEPENDENT and block is None:
        block = choose_block(params, tolerance, lattice.shape[0])
    return gaussian_field.sample_field(lattice, params, seed, scheme=scheme, block=block, padding=padding)


def patch_config(
    params: ModelParams,
    n: int,
    *,
    margin: int,
    seed: int = 0,
    dt: float | None = None,
    dt_factor: float = 1.0,
    noise: NoiseModel = NoiseModel.SPECTRAL,
    increment: ItoIncrement = ItoIncrement.EXPONENTIAL,
) -> PamConfig:
    """Unit-spacing torus holding the orthant sites of shell n and a margin on both sides."""
    sites = fractal.orthant_site_count(n, 1)
    grid_n = 1 << math.ceil(math.log2(sites + 2 * margin))
    base = pam.configure_pam(
        params, torus_side=float(grid_n), grid_n=grid_n, dt=dt, seed=seed, noise=noise, increment=increment
    )
    if dt_factor == 1.0:
        return base
    return pam.configure_pam(
        params,
        torus_side=float(grid_n),
        grid_n=grid_n,
        dt=base.dt * dt_factor,
        seed=seed,
        noise=noise,
        increment=increment,
    )


def pam_shell_values(cfg: PamConfig, n: int, seed: int) -> tuple[LatticeSpec, NDArray[np.float64]]:
    """u_t on the orthant sites of shell n, read off one torus run; d = 1 only."""
    lattice = fractal.orthant_lattice(n, 1)
    run = pam.simulate_pam(cfg, 1, seed)
    return lattice, run.values[0][: lattice.shape[0]]


def degenerate_estimate(n_min: int, n_max: int) -> DimensionEstimate:
    """Estimate reported when too few shells hold peaks: dimension 0."""
    return DimensionEstimate(
        value=0.0,
        band=fractal.SYSTEMATIC_BAND / max(n_max - n_min, 1),
        stderr=0.0,
        intercept=0.0,
        n_min=n_min,
        n_max=n_max,
        degenerate=True,
    )


def dimension_from_peaks(
    peaks: PeakSet,
    shells: range,
    rho_grid: Sequence[float],
    scheme: CoverScheme,
) -> tuple[CoverReport, DimensionEstimate]:
    report = fractal.build_cover_report(peaks, rho_grid, scheme, shells)
    try:
        estimate = fractal.estimate_dimension(report, (shells.start, shells.stop - 1))
    except InsufficientShellsError:
        logger.info("Too few occupied shells, dimension set to zero", extra={"gamma": peaks.gamma})
        estimate = degenerate_estimate(shells.start, shells.stop - 1)
    return report, estimate
