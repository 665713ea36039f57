import logging
from collections.abc import Sequence
from typing import Any

from mfshe.application.use_cases.base import ExperimentUseCase
from mfshe.application.use_cases.base import RunContext
from mfshe.domain.entities.experiment import GammaEstimate
from mfshe.domain.entities.field import FieldSample
from mfshe.domain.entities.fractal import CoverReport
from mfshe.domain.entities.fractal import PeakSet
from mfshe.domain.schemas.experiment import ExperimentConfig
from mfshe.domain.services import fractal
from mfshe.domain.services import shells
from mfshe.domain.services.random import Stream
from mfshe.domain.services.random import derive_seed
from mfshe.domain.types import GaugeKind

logger = logging.getLogger(__name__)


def peaks_name(gamma: float) -> str:
    return f"gamma-{gamma:g}"


def sample_shell(config: ExperimentConfig, n: int) -> FieldSample:
    return shells.shell_field(
        config.params(),
        n,
        derive_seed(config.seed, Stream.SHELL, n),
        scheme=config.sampler.scheme,
        block=config.sampler.block,
        tolerance=config.sampler.cross_block_tolerance,
        padding=config.sampler.padding,
    )


def fit_peaks(config: ExperimentConfig, peaks: PeakSet) -> tuple[CoverReport, GammaEstimate]:
    """Cover report and dimension estimate of one peak set over the configured shells."""
    report, estimate = shells.dimension_from_peaks(
        peaks, config.shells.indices, config.sampler.rho_grid, config.sampler.cover
    )
    return report, GammaEstimate(gamma=float(peaks.gamma or 0.0), estimate=estimate, peaks=len(peaks))


def cover_rows(report: CoverReport, gamma: float) -> list[dict[str, Any]]:
    return [
        {"gamma": gamma, "n": cover.n, "occupied": cover.occupied}
        | {f"nu_{rho:g}": value for rho, value in cover.nu.items()}
        for cover in report.shells
    ]


class LinearDimensionUseCase(ExperimentUseCase):
    """Peak-set dimensions of the linear solution Z_t over a grid of gauge levels.

    Every level is read off the same shell realizations, so the peak sets are nested in gamma.
    """

    async def _run(self, context: RunContext) -> None:
        config = context.config
        with context.stage("sample"):
            samples = await self._map(lambda n: sample_shell(config, n), list(config.shells.indices))
        context.summary["shells"] = [
            {"n": sample_n, "sites": sample.lattice.size} | _sampler_metadata(sample)
            for sample_n, sample in zip(config.shells.indices, samples, strict=True)
        ]

        with context.stage("extract"):
            peak_sets = await self._map(lambda gamma: _extract(samples, GaugeKind.LINEAR_SHE, gamma), config.gammas())

        await self._fit_and_persist(context, peak_sets)

    async def _fit_and_persist(self, context: RunContext, peak_sets: Sequence[PeakSet]) -> list[GammaEstimate]:
        config = context.config
        with context.stage("fit"):
            fits = await self._map(lambda peaks: fit_peaks(config, peaks), peak_sets)

        with context.stage("persist"):
            for peaks in peak_sets:
                name = peaks_name(float(peaks.gamma or 0.0))
                context.artifacts.append(await self._repository.save_peaks(context.directory, name, peaks))
            rows = [
                estimate.as_row() | {"expected": max(config.model.d - estimate.gamma, 0.0)} for _, estimate in fits
            ]
            await self._save_table(context, "dimension", rows)
            await self._save_table(
                context, "covers", [row for report, estimate in fits for row in cover_rows(report, estimate.gamma)]
            )
            await self._save_plot(
                context,
                "dimension",
                {
                    "gamma": [estimate.gamma for _, estimate in fits],
                    "estimate": [estimate.estimate.value for _, estimate in fits],
                    "band": [estimate.estimate.band for _, estimate in fits],
                },
            )
        context.summary["estimates"] = rows
        return [estimate for _, estimate in fits]


def _sampler_metadata(sample: FieldSample) -> dict[str, Any]:
    return {"scheme": str(sample.scheme)} | {
        key: value for key, value in sample.metadata.items() if isinstance(value, int | float)
    }


def _extract(samples: Sequence[FieldSample], kind: GaugeKind, gamma: float) -> PeakSet:
    parts = [fractal.extract_field_peaks(sample, kind, gamma) for sample in samples]
    return fractal.merge_peaks(parts)
