import asyncio
from pathlib import Path
from typing import Any

import numpy as np

from mfshe.domain.entities.field import FieldSample
from mfshe.domain.entities.field import LatticeSpec
from mfshe.domain.entities.pam import PamConfig
from mfshe.domain.entities.pam import PamRun
from mfshe.domain.services import pam
from mfshe.domain.types import SamplerScheme
from mfshe.infrastructure.adapters.storage.fields import write_field


def torus_lattice(cfg: PamConfig) -> LatticeSpec:
    return LatticeSpec.cube(d=cfg.params.d, sites=cfg.grid_n, spacing=cfg.spacing)


def replica_rows(run: PamRun) -> list[tuple[Any, ...]]:
    """Per replica: mean, maximum and the value at the origin site."""
    origin = (0,) * run.cfg.params.d
    return [
        (replica, float(np.mean(values)), float(np.max(values)), float(values[origin]))
        for replica, values in enumerate(run.values)
    ]


async def pam_simulate_logic(cfg: PamConfig, replicas: int, seed: int, snapshot: Path | None = None) -> PamRun:
    run = await asyncio.to_thread(pam.simulate_pam, cfg, replicas, seed)
    if snapshot is not None:
        # PAM snapshots are stored under the spectral-torus scheme code.
        sample = FieldSample(
            lattice=torus_lattice(cfg),
            values=run.values[0],
            params=cfg.params,
            seed=seed,
            scheme=SamplerScheme.SPECTRAL_TORUS,
        )
        await asyncio.to_thread(write_field, snapshot, sample)
    return run
