from unittest import mock

import pytest

from mfshe.application.use_cases.pam_dimension import PamDimensionUseCase
from mfshe.application.use_cases.pam_dimension import deficit_exponent
from mfshe.application.use_cases.pam_dimension import dimension_bracket
from mfshe.application.use_cases.pam_dimension import largest_rise
from mfshe.application.use_cases.pam_dimension import monotone_in_gamma
from mfshe.application.use_cases.pam_dimension import shell_config
from mfshe.domain.entities.experiment import GammaEstimate
from mfshe.domain.entities.fractal import DimensionEstimate
from mfshe.domain.entities.model import ModelParams
from mfshe.domain.schemas.experiment import ExperimentConfig
from mfshe.domain.schemas.experiment import SamplerSection
from mfshe.domain.types import ExperimentKind

from tests.unit.factories.schemas.experiment import ExperimentConfigFactory


def _gamma_estimate(gamma: float, value: float, band: float = 0.05, degenerate: bool = False) -> GammaEstimate:
    estimate = DimensionEstimate(
        value=value,
        band=band,
        stderr=0.0,
        intercept=0.0,
        n_min=2,
        n_max=5,
        degenerate=degenerate,
    )
    return GammaEstimate(gamma=gamma, estimate=estimate, peaks=10)


@pytest.fixture
def pam_config() -> ExperimentConfig:
    return ExperimentConfigFactory.build(
        kind=ExperimentKind.PAM_DIMENSION,
        sampler=SamplerSection(pam_margin=4, fk_orders=[2, 3], fk_paths=50, fk_dt=0.1, fk_cap=100.0),
    )


class TestHelpers:
    def test__dimension_bracket(self, params: ModelParams) -> None:
        q = params.tail_exponent

        bracket = dimension_bracket(params, [0.0, 0.5, 10.0], 0.5, 2.0)

        assert bracket[0] == (1.0, 1.0)
        assert bracket[1] == pytest.approx((1.0 - 2.0 * 0.5**q, 1.0 - 0.5 * 0.5**q))
        assert bracket[2] == (0.0, 0.0)

    @pytest.mark.parametrize(
        ("values", "expected"),
        [
            pytest.param([0.9, 0.6, 0.2], True, id="decreasing"),
            pytest.param([0.6, 0.65, 0.2], True, id="within_bands"),
            pytest.param([0.2, 0.6, 0.1], False, id="increasing"),
        ],
    )
    def test__monotone_in_gamma(self, values: list[float], expected: bool) -> None:
        estimates = [_gamma_estimate(gamma, value) for gamma, value in zip((0.1, 0.3, 0.5), values, strict=True)]

        assert monotone_in_gamma(list(reversed(estimates))) is expected

    def test__largest_rise(self) -> None:
        estimates = [_gamma_estimate(gamma, value) for gamma, value in ((0.5, 0.1), (0.1, 0.2), (0.3, 0.6))]

        assert largest_rise(estimates) == pytest.approx(0.3)

    def test__largest_rise__decreasing(self) -> None:
        estimates = [_gamma_estimate(gamma, value) for gamma, value in ((0.1, 0.9), (0.3, 0.6), (0.5, 0.2))]

        assert largest_rise(estimates) == pytest.approx(-0.4)

    @pytest.mark.parametrize("count", [0, 1])
    def test__largest_rise__single_level(self, count: int) -> None:
        assert largest_rise([_gamma_estimate(0.5, 0.7)][:count]) == 0.0

    def test__deficit_exponent(self) -> None:
        estimates = [_gamma_estimate(gamma, 1.0 - 0.5 * gamma**2) for gamma in (0.2, 0.4, 0.8)]

        assert deficit_exponent(estimates, 1) == pytest.approx(2.0)

    def test__deficit_exponent__too_few(self) -> None:
        estimates = [_gamma_estimate(0.2, 0.9), _gamma_estimate(0.4, 0.0, degenerate=True), _gamma_estimate(0.0, 1.0)]

        assert deficit_exponent(estimates, 1) is None

    def test__shell_config(self, pam_config: ExperimentConfig) -> None:
        cfg = shell_config(pam_config, 3)

        assert cfg.grid_n == 32
        assert cfg.spacing == 1.0
        assert cfg.params == pam_config.params()


class TestPamDimensionUseCase:
    async def test__nominal(self, pam_config: ExperimentConfig, mock_run_repository: mock.AsyncMock) -> None:
        record = await PamDimensionUseCase(repository=mock_run_repository, workers=2).execute(pam_config)

        assert record.failure is None
        assert "tables/moments.csv" in record.artifacts
        assert set(record.timings) == {"simulate", "extract", "fit", "persist", "moments", "tail"}
        assert record.summary["checks"]["expected_exponent"] == pytest.approx(5.0 / 3.0)
        assert record.summary["bracket"]["q"] == pytest.approx(2.5)
        assert record.summary["bracket"]["c_lower"] <= record.summary["bracket"]["c_upper"]
        assert record.summary["tail"] is None
