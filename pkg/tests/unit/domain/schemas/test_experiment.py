from pathlib import Path
from typing import Any

from pydantic import ValidationError

import pytest

from mfshe.domain.schemas.experiment import ExperimentConfig
from mfshe.domain.schemas.experiment import GaugeSection
from mfshe.domain.schemas.experiment import ModelSection
from mfshe.domain.schemas.experiment import SamplerSection
from mfshe.domain.schemas.experiment import ShellsSection
from mfshe.domain.services import pam
from mfshe.domain.types import ExperimentKind
from mfshe.domain.types import SamplerScheme

from tests.unit.factories.schemas.experiment import ExperimentConfigFactory


def _raw(**overrides: Any) -> dict[str, Any]:
    return {
        "id": "demo",
        "kind": "linear-dimension",
        "model": {"alpha": 1.5, "beta": 0.5, "d": 1},
        "shells": {"n_min": 2, "n_max": 5},
    } | overrides


class TestModelSection:
    def test__inadmissible(self) -> None:
        with pytest.raises(ValidationError) as exc_info:
            ModelSection(alpha=1.0, beta=1.5, d=2)
        assert "beta must satisfy" in str(exc_info.value)

    def test__to_params(self) -> None:
        params = ModelSection(alpha=2.0, beta=0.5, d=2, t=3.0).to_params()

        assert (params.alpha, params.beta, params.d, params.t) == (2.0, 0.5, 2, 3.0)


class TestShellsSection:
    def test__too_few_shells(self) -> None:
        with pytest.raises(ValidationError) as exc_info:
            ShellsSection(n_min=2, n_max=4)
        assert "at least 4 shells" in str(exc_info.value)

    def test__indices(self) -> None:
        assert list(ShellsSection(n_min=3, n_max=6).indices) == [3, 4, 5, 6]


class TestGaugeSection:
    def test__default_grid(self) -> None:
        assert GaugeSection().grid(2) == pytest.approx([0.2, 0.5, 1.0, 1.5, 1.8])

    def test__explicit_grid__sorted_unique(self) -> None:
        assert GaugeSection(gammas=[0.5, 0.1, 0.5]).grid(1) == [0.1, 0.5]

    def test__negative_gamma(self) -> None:
        with pytest.raises(ValidationError):
            GaugeSection(gammas=[-0.1])


class TestExperimentConfig:
    def test__defaults(self) -> None:
        config = ExperimentConfig.model_validate(_raw())

        assert config.seed == 0
        assert config.sampler.scheme is SamplerScheme.BLOCK_INDEPENDENT
        assert config.model.t == 1.0
        assert config.output.plots is True
        assert config.sampler.fk_cap * config.sampler.fk_dt <= pam.CAP_STEP_LIMIT

    def test__unknown_key(self) -> None:
        with pytest.raises(ValidationError) as exc_info:
            ExperimentConfig.model_validate(_raw(colour="blue"))
        assert "Extra inputs are not permitted" in str(exc_info.value)

    def test__unknown_nested_key(self) -> None:
        with pytest.raises(ValidationError) as exc_info:
            ExperimentConfig.model_validate(_raw(sampler={"schem": "iid-surrogate"}))
        assert "sampler.schem" in str(exc_info.value)

    @pytest.mark.parametrize(
        ("overrides", "error_msg"),
        [
            pytest.param(
                {"model": {"alpha": 2.0, "beta": 0.5, "d": 3}, "sampler": {"scheme": "circulant-exact"}},
                "offered for d in {1, 2} only",
                id="exact_in_3d",
            ),
            pytest.param(
                {"sampler": {"scheme": "circulant-exact"}, "shells": {"n_min": 5, "n_max": 11}},
                "exact sampling stops at shell 10",
                id="exact_shell_too_large",
            ),
            pytest.param(
                {"sampler": {"block": 2}},
                "block must exceed twice the diffusive length",
                id="block_too_small",
            ),
            pytest.param(
                {"kind": "pam-dimension", "model": {"alpha": 2.0, "beta": 0.5, "d": 2}},
                "runs in d = 1",
                id="pam_in_2d",
            ),
            pytest.param(
                {"kind": "pam-dimension", "shells": {"n_min": 5, "n_max": 11}},
                "PAM shells stop at 10",
                id="pam_shell_too_large",
            ),
            pytest.param(
                {"kind": "pam-dimension", "sampler": {"fk_orders": [3, 3]}},
                "at least two distinct orders",
                id="pam_single_order",
            ),
            pytest.param({"id": "bad id"}, "String should match pattern", id="id_pattern"),
        ],
    )
    def test__feasibility(self, overrides: dict[str, Any], error_msg: str) -> None:
        with pytest.raises(ValidationError) as exc_info:
            ExperimentConfig.model_validate(_raw(**overrides))
        assert error_msg in str(exc_info.value)

    def test__gammas(self, config: ExperimentConfig) -> None:
        assert config.gammas() == [0.1, 0.5]

    def test__digest__ignores_output(self, config: ExperimentConfig) -> None:
        output = config.output.model_copy(update={"directory": Path("/elsewhere")})
        moved = config.model_copy(update={"output": output})

        assert moved.digest() == config.digest()
        assert len(config.digest()) == 64

    def test__digest__tracks_content(self, config: ExperimentConfig) -> None:
        assert config.with_seed(config.seed + 1).digest() != config.digest()

    def test__with_seed(self, config: ExperimentConfig) -> None:
        reseeded = config.with_seed(42)

        assert reseeded.seed == 42
        assert reseeded.model == config.model
        assert reseeded.kind is ExperimentKind.LINEAR_DIMENSION

    def test__factory(self) -> None:
        config = ExperimentConfigFactory.build(sampler=SamplerSection(scheme=SamplerScheme.IID_SURROGATE))

        assert config.sampler.scheme is SamplerScheme.IID_SURROGATE
        assert list(config.shells.indices) == [2, 3, 4, 5]
