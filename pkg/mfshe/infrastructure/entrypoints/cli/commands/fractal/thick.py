import asyncio
from pathlib import Path

from mfshe.domain.entities.fractal import ThicknessResult
from mfshe.domain.services import fractal
from mfshe.infrastructure.adapters.storage.peaks import read_peaks


async def fractal_thick_logic(path: Path, theta: float, start: int, end: int | None = None) -> ThicknessResult:
    peaks = await asyncio.to_thread(read_peaks, path)
    return await asyncio.to_thread(fractal.is_theta_thick, peaks, theta, start, end)
