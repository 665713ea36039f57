import asyncio
from pathlib import Path

import numpy as np

from mfshe.domain.entities.field import FieldSample
from mfshe.domain.entities.field import LatticeSpec
from mfshe.domain.entities.model import ModelParams
from mfshe.domain.services import gaussian_field
from mfshe.domain.services import kernels
from mfshe.domain.types import SamplerScheme
from mfshe.infrastructure.adapters.storage.fields import write_field


async def field_sample_logic(
    params: ModelParams,
    lattice: LatticeSpec,
    scheme: SamplerScheme,
    seed: int,
    out: Path,
    block: int | None = None,
    padding: int = 2,
) -> FieldSample:
    sample = await asyncio.to_thread(
        gaussian_field.sample_field,
        lattice,
        params,
        seed,
        scheme=scheme,
        block=block,
        padding=padding,
    )
    await asyncio.to_thread(write_field, out, sample)
    return sample


def sample_summary(sample: FieldSample) -> dict[str, float | int | str]:
    return {
        "Scheme": str(sample.scheme),
        "Sites": sample.lattice.size,
        "Mean": float(np.mean(sample.values)),
        "Sample variance": float(np.var(sample.values)),
        "Variance": kernels.variance(sample.params),
        "Maximum": float(np.max(sample.values)),
    }
