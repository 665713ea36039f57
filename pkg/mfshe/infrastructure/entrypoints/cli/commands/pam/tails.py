import asyncio

import numpy as np

from mfshe.domain.entities.pam import ExceedancePoint
from mfshe.domain.entities.pam import PamConfig
from mfshe.domain.services import pam


async def pam_tails_logic(
    cfg: PamConfig, z_max: float, points: int, replicas: int, seed: int
) -> list[ExceedancePoint]:
    z_grid = np.linspace(0.0, z_max, points)
    return await asyncio.to_thread(pam.tail_probability, cfg.params, z_grid, replicas, cfg, seed)
