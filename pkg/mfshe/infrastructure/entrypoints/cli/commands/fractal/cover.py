import asyncio
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from mfshe.domain.entities.fractal import CoverReport
from mfshe.domain.entities.fractal import DimensionEstimate
from mfshe.domain.services import fractal
from mfshe.domain.types import CoverScheme
from mfshe.infrastructure.adapters.storage.peaks import read_peaks


def shell_range(n_min: int | None, n_max: int | None, shells: Sequence[int]) -> range | None:
    """Explicit bounds, falling back to the tagged shells of the peak set."""
    if n_min is None and n_max is None:
        return None
    low = n_min if n_min is not None else min(shells, default=1)
    high = n_max if n_max is not None else max(shells, default=low)
    return range(low, high + 1)


async def fractal_cover_logic(
    path: Path,
    rho_grid: Sequence[float],
    scheme: CoverScheme,
    n_min: int | None = None,
    n_max: int | None = None,
) -> CoverReport:
    peaks = await asyncio.to_thread(read_peaks, path)
    shells = shell_range(n_min, n_max, peaks.shells.tolist())
    return await asyncio.to_thread(fractal.build_cover_report, peaks, rho_grid, scheme, shells)


def cover_rows(report: CoverReport) -> list[tuple[Any, ...]]:
    return [(cover.n, cover.occupied, *(cover.nu[rho] for rho in report.rho_grid)) for cover in report.shells]


async def fractal_dim_logic(
    path: Path,
    rho_grid: Sequence[float],
    scheme: CoverScheme,
    n_min: int | None = None,
    n_max: int | None = None,
) -> DimensionEstimate:
    report = await fractal_cover_logic(path, rho_grid, scheme, n_min, n_max)
    return fractal.estimate_dimension(report)
