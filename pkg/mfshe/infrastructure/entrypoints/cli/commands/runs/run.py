from pathlib import Path

from mfshe.application.use_cases.run_experiment import run_experiment
from mfshe.domain.entities.experiment import RunRecord
from mfshe.domain.schemas.experiment import ExperimentConfig
from mfshe.domain.types import ExperimentKind
from mfshe.infrastructure.adapters.storage.configs import read_config
from mfshe.infrastructure.config.settings.app import app_settings
from mfshe.infrastructure.entrypoints.cli.dependencies import get_run_repository


def load_experiment(path: Path, kind: ExperimentKind | None = None) -> ExperimentConfig:
    """Reads a config file, applying MFSHE_SEED and an optional kind override."""
    config = read_config(path)
    if app_settings.SEED is not None:
        config = config.with_seed(app_settings.SEED)
    if kind is not None and config.kind is not kind:
        config = ExperimentConfig.model_validate(config.model_dump() | {"kind": kind})
    return config


async def run_logic(config: ExperimentConfig, workers: int, output_dir: Path | None = None) -> RunRecord:
    return await run_experiment(config, get_run_repository(output_dir), workers=workers)
