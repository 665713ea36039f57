import logging
import math
from collections.abc import Sequence
from typing import Any
from typing import Final

import numpy as np
from numpy.typing import NDArray

from mfshe.application.use_cases.base import RunContext
from mfshe.application.use_cases.linear_dimension import LinearDimensionUseCase
from mfshe.domain.entities.experiment import GammaEstimate
from mfshe.domain.entities.field import LatticeSpec
from mfshe.domain.entities.fractal import PeakSet
from mfshe.domain.entities.model import ModelParams
from mfshe.domain.entities.pam import MomentEstimate
from mfshe.domain.entities.pam import PamConfig
from mfshe.domain.exceptions import CensoringError
from mfshe.domain.exceptions import InvalidParametersError
from mfshe.domain.schemas.experiment import ExperimentConfig
from mfshe.domain.services import fractal
from mfshe.domain.services import gaussian_field
from mfshe.domain.services import pam
from mfshe.domain.services import shells
from mfshe.domain.services.random import Stream
from mfshe.domain.services.random import derive_seed
from mfshe.domain.types import GaugeKind

logger = logging.getLogger(__name__)

EXPONENT_TOLERANCE: Final[float] = 0.5


def shell_config(config: ExperimentConfig, n: int) -> PamConfig:
    sampler = config.sampler
    return shells.patch_config(
        config.params(),
        n,
        margin=sampler.pam_margin,
        seed=config.seed,
        dt=sampler.pam_dt,
        dt_factor=sampler.pam_dt_factor,
        noise=sampler.pam_noise,
        increment=sampler.pam_increment,
    )


def sample_pam_shell(config: ExperimentConfig, n: int) -> tuple[LatticeSpec, NDArray[np.float64]]:
    return shells.pam_shell_values(shell_config(config, n), n, derive_seed(config.seed, Stream.SHELL, n))


def moment_estimate(config: ExperimentConfig, k: int) -> MomentEstimate:
    sampler = config.sampler
    seed = derive_seed(config.seed, Stream.FEYNMAN_KAC)
    return pam.fk_moment(k, config.params(), sampler.fk_paths, sampler.fk_dt, sampler.fk_cap, seed)


def dimension_bracket(
    params: ModelParams,
    gammas: Sequence[float],
    c_small: float,
    c_big: float,
) -> list[tuple[float, float]]:
    """[0 v (d - C gamma^q), 0 v (d - c gamma^q)] with q the tail exponent."""
    q = params.tail_exponent
    return [(max(params.d - c_big * gamma**q, 0.0), max(params.d - c_small * gamma**q, 0.0)) for gamma in gammas]


def largest_rise(estimates: Sequence[GammaEstimate]) -> float:
    """Largest increase of the estimate between neighbouring levels beyond their summed bands."""
    ordered = sorted(estimates, key=lambda estimate: estimate.gamma)
    return max(
        (
            after.estimate.value - before.estimate.value - before.estimate.band - after.estimate.band
            for before, after in zip(ordered, ordered[1:], strict=False)
        ),
        default=0.0,
    )


def monotone_in_gamma(estimates: Sequence[GammaEstimate]) -> bool:
    """Estimates nonincreasing in gamma up to the sum of neighbouring bands."""
    return largest_rise(estimates) <= 0.0


def deficit_exponent(estimates: Sequence[GammaEstimate], d: int) -> float | None:
    """log-log slope of d - estimate against gamma over the levels with 0 < estimate < d."""
    usable = [
        estimate
        for estimate in estimates
        if estimate.gamma > 0.0 and not estimate.estimate.degenerate and 0.0 < estimate.estimate.value < d
    ]
    if len(usable) < 2:
        return None
    return gaussian_field.loglog_slope(
        [estimate.gamma for estimate in usable],
        [d - estimate.estimate.value for estimate in usable],
    )


class PamDimensionUseCase(LinearDimensionUseCase):
    """Peak-set dimensions of the parabolic Anderson model, with the empirical bracket around them."""

    async def _run(self, context: RunContext) -> None:
        config = context.config
        params = config.params()
        with context.stage("simulate"):
            patches = await self._map(lambda n: sample_pam_shell(config, n), list(config.shells.indices))
        context.summary["shells"] = [
            {"n": n, "sites": lattice.size} for n, (lattice, _) in zip(config.shells.indices, patches, strict=True)
        ]

        with context.stage("extract"):
            peak_sets = await self._map(lambda gamma: extract_pam_peaks(patches, params, gamma), config.gammas())
        estimates = await self._fit_and_persist(context, peak_sets)

        context.summary["checks"] = {
            "monotone": monotone_in_gamma(estimates),
            "deficit_exponent": deficit_exponent(estimates, params.d),
            "expected_exponent": params.tail_exponent,
            "exponent_tolerance": EXPONENT_TOLERANCE,
        }

        with context.stage("moments"):
            moments = await self._map(lambda k: moment_estimate(config, k), sorted(set(config.sampler.fk_orders)))
        await self._save_table(context, "moments", [_moment_row(moment) for moment in moments])
        context.summary["bracket"] = _bracket_summary(params, config.gammas(), moments)

        with context.stage("tail"):
            logs = np.log(np.concatenate([values for _, values in patches]).clip(min=np.finfo(float).tiny))
            context.summary["tail"] = _tail_summary(logs, params)


def _bracket_summary(params: ModelParams, gammas: list[float], moments: list[MomentEstimate]) -> dict[str, Any]:
    bracket = pam.moment_bracket(moments, params)
    summary: dict[str, Any] = {"q": bracket.q, "c_lower": bracket.c_lower, "c_upper": bracket.c_upper}
    try:
        c_small, c_big = pam.tail_constants(params, bracket.c_lower, bracket.c_upper)
    except InvalidParametersError:
        logger.warning("Moment bracket not positive, no dimension bracket", extra={"c_lower": bracket.c_lower})
        return summary
    limits = dimension_bracket(params, gammas, c_small, c_big)
    return summary | {
        "c_small": c_small,
        "c_big": c_big,
        "dimension": [
            {"gamma": gamma, "lower": lower, "upper": upper}
            for gamma, (lower, upper) in zip(gammas, limits, strict=True)
        ],
        "limsup": list(pam.pam_limsup_bracket(params, c_small, c_big)),
    }


def extract_pam_peaks(
    patches: Sequence[tuple[LatticeSpec, NDArray[np.float64]]],
    params: ModelParams,
    gamma: float,
) -> PeakSet:
    rule = fractal.gauge_rule(GaugeKind.PAM, gamma, params)
    parts = [fractal.extract_peaks(values, lattice, rule, source="pam") for lattice, values in patches]
    return fractal.merge_peaks(parts)


def _moment_row(moment: MomentEstimate) -> dict[str, Any]:
    return {
        "k": moment.k,
        "value": moment.value,
        "log_value": moment.log_value,
        "stderr": moment.stderr,
        "n_paths": moment.n_paths,
        "cap": moment.cap,
    }


def _tail_summary(logs: NDArray[np.float64], params: ModelParams) -> dict[str, Any] | None:
    try:
        fit = fractal.tail_exponent_fit(logs)
    except (CensoringError, InvalidParametersError) as e:
        logger.warning("Tail of log u not resolvable", extra={"samples": int(logs.size), "reason": str(e)})
        return None
    return {
        "b": fit.b,
        "slope": fit.slope,
        "expected_b": params.tail_exponent,
        "coefficient": fit.coefficient,
        "c_lower": fit.c_lower,
        "c_upper": fit.c_upper,
        "z_min": fit.z_min,
        "z_max": fit.z_max,
    }
