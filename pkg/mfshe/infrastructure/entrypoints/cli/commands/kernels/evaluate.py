import asyncio
from collections.abc import Callable
from collections.abc import Sequence

import numpy as np

from mfshe.domain.entities.model import ModelParams
from mfshe.domain.services import gaussian_field
from mfshe.domain.services import kernels
from mfshe.domain.types import KernelFunction


def radial_point(r: float, d: int) -> np.ndarray:
    """The point (r, 0, ..., 0) of R^d."""
    point = np.zeros(d)
    point[0] = r
    return point


def kernel_function(function: KernelFunction, params: ModelParams) -> Callable[[float], float]:
    match function:
        case KernelFunction.LEVY:
            return lambda r: kernels.levy_exponent(radial_point(r, params.d), params)
        case KernelFunction.DENSITY:
            return lambda r: kernels.stable_density(radial_point(r, params.d), params.t, params)
        case KernelFunction.RIESZ:
            return lambda r: kernels.riesz_kernel(radial_point(r, params.d), params)
        case KernelFunction.SPECTRAL:
            return lambda r: kernels.z_spectral_density(r, params)
        case KernelFunction.COVARIANCE:
            return lambda r: gaussian_field.z_covariance(radial_point(r, params.d), params)
        case KernelFunction.FACTOR:
            return kernels.factorize(params).factor


async def kernel_eval_logic(
    function: KernelFunction,
    params: ModelParams,
    grid: Sequence[float],
) -> list[tuple[float, float]]:
    evaluate = kernel_function(function, params)
    return await asyncio.to_thread(lambda: [(r, evaluate(r)) for r in grid])
