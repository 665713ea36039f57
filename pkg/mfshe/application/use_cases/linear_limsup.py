import math
from collections.abc import Sequence
from typing import Any

import numpy as np
from scipy import stats

from mfshe.application.use_cases.base import ExperimentUseCase
from mfshe.application.use_cases.base import RunContext
from mfshe.application.use_cases.linear_dimension import sample_shell
from mfshe.domain.entities.experiment import ShellMaximum
from mfshe.domain.schemas.experiment import ExperimentConfig
from mfshe.domain.services import kernels


def shell_maximum(config: ExperimentConfig, n: int) -> ShellMaximum:
    """Maximum over the shell of Z_t normalized to unit variance."""
    sample = sample_shell(config, n)
    deviation = math.sqrt(kernels.variance(config.params()))
    return ShellMaximum(n=n, sites=sample.lattice.size, maximum=float(sample.values.max()) / deviation)


def limsup_summary(maxima: Sequence[ShellMaximum], d: int) -> dict[str, Any]:
    """Ratios max_n / sqrt(n), their running maximum and the slope of max_n against sqrt(n)."""
    ratios = [maximum.ratio for maximum in maxima]
    fit = stats.linregress(np.sqrt([maximum.n for maximum in maxima]), [maximum.maximum for maximum in maxima])
    return {
        "target": math.sqrt(2.0 * d),
        "final_ratio": ratios[-1],
        "fitted_ratio": float(fit.slope),
        "running_max": np.maximum.accumulate([maximum.maximum for maximum in maxima]).tolist(),
    }


class LinearLimsupUseCase(ExperimentUseCase):
    async def _run(self, context: RunContext) -> None:
        config = context.config
        with context.stage("sample"):
            maxima = await self._map(lambda n: shell_maximum(config, n), list(config.shells.indices))

        with context.stage("persist"):
            await self._save_table(
                context,
                "maxima",
                [{"n": m.n, "sites": m.sites, "maximum": m.maximum, "ratio": m.ratio} for m in maxima],
            )
            await self._save_plot(
                context,
                "maxima",
                {"sqrt_n": [math.sqrt(m.n) for m in maxima], "maximum": [m.maximum for m in maxima]},
            )
        context.summary["limsup"] = limsup_summary(maxima, config.model.d)
