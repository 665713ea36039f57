import asyncio
from collections.abc import Sequence

from mfshe.domain.entities.model import ModelParams
from mfshe.domain.entities.pam import MomentEstimate
from mfshe.domain.services import pam
from mfshe.domain.services.random import Stream
from mfshe.domain.services.random import derive_seed


async def pam_fk_logic(
    orders: Sequence[int],
    params: ModelParams,
    paths: int,
    dt_path: float,
    cap: float,
    seed: int,
) -> list[MomentEstimate]:
    # Independent stream per order k.
    async with asyncio.TaskGroup() as tg:
        tasks = [
            tg.create_task(
                asyncio.to_thread(
                    pam.fk_moment, k, params, paths, dt_path, cap, derive_seed(seed, Stream.FEYNMAN_KAC, k)
                )
            )
            for k in orders
        ]
    return [task.result() for task in tasks]
