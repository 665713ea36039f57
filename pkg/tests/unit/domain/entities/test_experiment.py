import math
from pathlib import Path

import pytest

from mfshe.domain.entities.experiment import GammaEstimate
from mfshe.domain.entities.experiment import ShellMaximum
from mfshe.domain.entities.fractal import DimensionEstimate
from mfshe.domain.exceptions import InvalidParametersError

from tests.unit.factories.entities.experiment import RunRecordFactory


class TestGammaEstimate:
    def test__as_row(self) -> None:
        estimate = GammaEstimate(
            gamma=0.25,
            estimate=DimensionEstimate(value=0.7, band=0.2, stderr=0.05, intercept=-1.0, n_min=3, n_max=8),
            peaks=120,
        )

        assert estimate.as_row() == {
            "gamma": 0.25,
            "estimate": 0.7,
            "band": 0.2,
            "stderr": 0.05,
            "n_min": 3,
            "n_max": 8,
            "degenerate": False,
            "peaks": 120,
        }


class TestShellMaximum:
    def test__ratio(self) -> None:
        assert ShellMaximum(n=4, sites=33, maximum=3.0).ratio == 1.5


class TestRunRecord:
    def test__nominal(self) -> None:
        record = RunRecordFactory.build(config_hash="ab" * 32, artifacts=("tables/dimension.csv",))

        assert record.short_hash == "abababab"
        assert not record.failed

    def test__failed(self) -> None:
        assert RunRecordFactory.build(failure="BlowupError: overflow").failed

    def test__hash__invalid(self) -> None:
        with pytest.raises(InvalidParametersError) as exc_info:
            RunRecordFactory.build(config_hash="abc")
        assert "sha256" in str(exc_info.value)

    def test__artifacts__absolute(self) -> None:
        with pytest.raises(InvalidParametersError):
            RunRecordFactory.build(artifacts=(str(Path("/tmp/tables/x.csv").absolute()),))

    def test__timings__kept(self) -> None:
        record = RunRecordFactory.build(timings={"sample": 1.5})

        assert math.isclose(record.timings["sample"], 1.5)
