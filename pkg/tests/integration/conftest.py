from pathlib import Path

import pytest

from mfshe.domain.schemas.experiment import ExperimentConfig
from mfshe.infrastructure.adapters.storage.runs import FileRunRepository

from tests.unit.factories.schemas.experiment import ExperimentConfigFactory


@pytest.fixture
def config(request: pytest.FixtureRequest) -> ExperimentConfig:
    return ExperimentConfigFactory.build(**getattr(request, "param", {}))


@pytest.fixture
def runs_root(tmp_path: Path) -> Path:
    return tmp_path / "runs"


@pytest.fixture
def run_repository(runs_root: Path) -> FileRunRepository:
    return FileRunRepository(root=runs_root)
