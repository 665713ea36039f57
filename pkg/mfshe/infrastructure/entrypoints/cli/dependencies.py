from pathlib import Path

from mfshe.domain.ports.runs import RunRepository
from mfshe.infrastructure.adapters.storage.runs import FileRunRepository
from mfshe.infrastructure.config.settings.app import app_settings


def get_run_repository(root: Path | None = None) -> RunRepository:
    return FileRunRepository(root=root or app_settings.OUTPUT_DIR)


def get_workers(workers: int | None = None) -> int:
    return workers or app_settings.WORKERS


def get_seed(seed: int | None = None) -> int:
    """Explicit seed first, then MFSHE_SEED, then 0."""
    if seed is not None:
        return seed
    return app_settings.SEED if app_settings.SEED is not None else 0
