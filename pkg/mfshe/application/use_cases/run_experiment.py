from mfshe.application.use_cases.base import ExperimentUseCase
from mfshe.application.use_cases.linear_dimension import LinearDimensionUseCase
from mfshe.application.use_cases.linear_limsup import LinearLimsupUseCase
from mfshe.application.use_cases.pam_dimension import PamDimensionUseCase
from mfshe.application.use_cases.validation_suite import ValidationSuiteUseCase
from mfshe.domain.entities.experiment import RunRecord
from mfshe.domain.ports.runs import RunRepository
from mfshe.domain.schemas.experiment import ExperimentConfig
from mfshe.domain.types import ExperimentKind

USE_CASES: dict[ExperimentKind, type[ExperimentUseCase]] = {
    ExperimentKind.LINEAR_DIMENSION: LinearDimensionUseCase,
    ExperimentKind.LINEAR_LIMSUP: LinearLimsupUseCase,
    ExperimentKind.PAM_DIMENSION: PamDimensionUseCase,
    ExperimentKind.VALIDATION: ValidationSuiteUseCase,
}


async def run_experiment(config: ExperimentConfig, repository: RunRepository, workers: int = 1) -> RunRecord:
    """Runs the experiment named by ``config.kind`` and persists it."""
    use_case = USE_CASES[config.kind](repository=repository, workers=workers)
    return await use_case.execute(config)
