from pathlib import Path
from unittest import mock

import pytest

from mfshe.domain.entities.model import ModelParams
from mfshe.domain.ports.runs import RunRepository
from mfshe.domain.schemas.experiment import ExperimentConfig

from tests.unit.factories.entities.model import ModelParamsFactory
from tests.unit.factories.schemas.experiment import ExperimentConfigFactory

# --- Model parameters ---


@pytest.fixture
def params(request: pytest.FixtureRequest) -> ModelParams:
    return ModelParamsFactory.build(**getattr(request, "param", {}))


@pytest.fixture
def params_2d() -> ModelParams:
    return ModelParamsFactory.build(alpha=2.0, beta=0.5, d=2)


@pytest.fixture
def config(request: pytest.FixtureRequest) -> ExperimentConfig:
    return ExperimentConfigFactory.build(**getattr(request, "param", {}))


# --- Repository Mocks ---


@pytest.fixture
def mock_run_repository(tmp_path: Path) -> mock.AsyncMock:
    repository = mock.AsyncMock(spec=RunRepository)
    repository.create.return_value = tmp_path
    repository.save_table.side_effect = lambda run_dir, name, rows: f"tables/{name}.csv"
    repository.save_peaks.side_effect = lambda run_dir, name, peaks: f"peaks/{name}.txt"
    repository.save_plot.side_effect = lambda run_dir, name, columns: f"plots/{name}.dat"
    repository.save_record.return_value = "summary.json"
    return repository
