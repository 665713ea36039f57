import asyncio
from dataclasses import dataclass

from mfshe.domain.entities.pam import DecayPoint
from mfshe.domain.entities.pam import PamConfig
from mfshe.domain.entities.pam import PicardSpec
from mfshe.domain.services import pam


@dataclass(frozen=True, kw_only=True)
class PicardReport:
    decay: list[DecayPoint]
    independence_range: float | None
    coupling_error: tuple[float, float] | None = None


async def pam_picard_logic(
    spec: PicardSpec,
    cfg: PamConfig,
    replicas: int,
    seed: int,
    coupling: bool = False,
) -> PicardReport:
    decay = await asyncio.to_thread(pam.picard_decay, spec, cfg, replicas, seed)
    error = await asyncio.to_thread(pam.coupling_error, spec, cfg, replicas, seed) if coupling else None
    reach = pam.independence_range(spec) if spec.ell > 1.0 and spec.m >= 1 else None
    return PicardReport(decay=decay, independence_range=reach, coupling_error=error)
