import dataclasses
import math
from collections.abc import Iterable
from pathlib import Path
from unittest import mock

import numpy as np
import pytest
from typer.testing import CliRunner

from mfshe.domain.entities.model import ModelParams
from mfshe.domain.entities.pam import DecayPoint
from mfshe.domain.entities.pam import ExceedancePoint
from mfshe.domain.entities.pam import MomentEstimate
from mfshe.domain.entities.pam import PamConfig
from mfshe.domain.entities.pam import PamRun
from mfshe.domain.entities.pam import PicardSpec
from mfshe.domain.exceptions import BlowupError
from mfshe.domain.exceptions import GeometryError
from mfshe.domain.services import pam
from mfshe.domain.types import ItoIncrement
from mfshe.domain.types import NoiseModel
from mfshe.domain.types import SamplerScheme
from mfshe.infrastructure.adapters.storage.fields import read_field
from mfshe.infrastructure.entrypoints.cli.commands.pam.fk import pam_fk_logic
from mfshe.infrastructure.entrypoints.cli.commands.pam.picard import PicardReport
from mfshe.infrastructure.entrypoints.cli.commands.pam.picard import pam_picard_logic
from mfshe.infrastructure.entrypoints.cli.commands.pam.simulate import pam_simulate_logic
from mfshe.infrastructure.entrypoints.cli.commands.pam.simulate import replica_rows
from mfshe.infrastructure.entrypoints.cli.commands.pam.tails import pam_tails_logic
from mfshe.infrastructure.entrypoints.cli.main import app

from tests.unit.infrastructure.entrypoints.cli.conftest import TextCleaner

MODEL_ARGS = ["--alpha", "1.5", "--beta", "0.5"]
TARGET_PATH = "mfshe.infrastructure.entrypoints.cli.commands.pam"


@pytest.fixture
def quiet_cfg(params: ModelParams) -> PamConfig:
    return pam.configure_pam(params, torus_side=8.0, grid_n=16, noise_scale=0.0)


@pytest.fixture
def quiet_run(quiet_cfg: PamConfig) -> PamRun:
    return PamRun(cfg=quiet_cfg, seed=4, values=np.ones((2, 16)), positivity_violations=0)


def _moment(k: int, log_value: float) -> MomentEstimate:
    return MomentEstimate(
        k=k,
        value=math.exp(log_value),
        log_value=log_value,
        stderr=0.1,
        n_paths=100,
        dt_path=0.01,
        cap=1e2,
        t=1.0,
    )


class TestPamLogic:
    async def test__simulate(self, quiet_cfg: PamConfig, tmp_path: Path) -> None:
        snapshot = tmp_path / "u.bin"

        run = await pam_simulate_logic(quiet_cfg, 2, 4, snapshot)

        rows = replica_rows(run)
        assert [row[0] for row in rows] == [0, 1]
        assert np.allclose([row[1:] for row in rows], 1.0)
        sample = read_field(snapshot)
        assert sample.scheme is SamplerScheme.SPECTRAL_TORUS
        assert sample.seed == 4
        assert sample.lattice.shape == (16,)
        assert sample.lattice.spacing == 0.5

    async def test__tails(self, quiet_cfg: PamConfig) -> None:
        points = await pam_tails_logic(quiet_cfg, 1.0, 2, 4, 0)

        assert [point.z for point in points] == [0.0, 1.0]
        assert points[1].probability == 0.0
        assert points[1].censored

    async def test__fk(self, params: ModelParams) -> None:
        estimates = await pam_fk_logic([2, 3], params, 20, 0.1, 100.0, 0)

        assert [estimate.k for estimate in estimates] == [2, 3]
        assert all(math.isfinite(estimate.log_value) for estimate in estimates)

    async def test__picard(self, params: ModelParams) -> None:
        cfg = pam.configure_pam(
            params, torus_side=16.0, grid_n=16, seed=2, noise=NoiseModel.FACTOR, increment=ItoIncrement.LINEAR
        )
        spec = PicardSpec(ell=2.0, m=1, params=params)

        report = await pam_picard_logic(spec, cfg, 2, 0)

        assert [point.level for point in report.decay] == [0]
        assert report.independence_range == pam.independence_range(spec)
        assert report.coupling_error is None


class TestPamSimulateCommand:
    @pytest.fixture
    def mock_pam_simulate_logic(self, quiet_run: PamRun) -> Iterable[mock.AsyncMock]:
        with mock.patch(f"{TARGET_PATH}.pam_simulate_logic", new_callable=mock.AsyncMock) as patched:
            patched.return_value = quiet_run
            yield patched

    def test__nominal(self, runner: CliRunner, mock_pam_simulate_logic: mock.AsyncMock) -> None:
        result = runner.invoke(
            app,
            ["pam", "simulate", *MODEL_ARGS, "--L", "8", "--grid", "16", "--replicas", "2", "--seed", "4"],
        )

        assert result.exit_code == 0
        assert result.stdout == "replica,mean,max,origin\n0,1.0,1.0,1.0\n1,1.0,1.0,1.0\n"
        cfg, replicas, seed, snapshot = mock_pam_simulate_logic.await_args.args
        assert (cfg.torus_side, cfg.grid_n, cfg.seed) == (8.0, 16, 4)
        assert cfg.noise is NoiseModel.SPECTRAL
        assert (replicas, seed, snapshot) == (2, 4, None)

    def test__positivity_violations(
        self,
        runner: CliRunner,
        mock_pam_simulate_logic: mock.AsyncMock,
        quiet_run: PamRun,
    ) -> None:
        mock_pam_simulate_logic.return_value = dataclasses.replace(quiet_run, positivity_violations=3)

        result = runner.invoke(app, ["pam", "simulate", *MODEL_ARGS, "--L", "8", "--grid", "16"])

        assert result.exit_code == 0
        assert "3 nonpositive values" in result.stderr

    def test__grid__not_power_of_two(
        self,
        runner: CliRunner,
        mock_pam_simulate_logic: mock.AsyncMock,
        clean_typer_text: TextCleaner,
    ) -> None:
        result = runner.invoke(app, ["pam", "simulate", *MODEL_ARGS, "--grid", "12"])

        assert result.exit_code == 2
        assert "grid_n must be a power of two" in clean_typer_text(result.output)
        mock_pam_simulate_logic.assert_not_awaited()

    def test__blowup(
        self,
        runner: CliRunner,
        mock_pam_simulate_logic: mock.AsyncMock,
        clean_typer_text: TextCleaner,
    ) -> None:
        mock_pam_simulate_logic.side_effect = BlowupError("PAM step overflowed")

        result = runner.invoke(app, ["pam", "simulate", *MODEL_ARGS, "--L", "8", "--grid", "16"])

        assert result.exit_code == 1
        assert "Error: PAM step overflowed" in clean_typer_text(result.stderr)


class TestPamPicardCommand:
    @pytest.fixture
    def mock_pam_picard_logic(self) -> Iterable[mock.AsyncMock]:
        with mock.patch(f"{TARGET_PATH}.pam_picard_logic", new_callable=mock.AsyncMock) as patched:
            patched.return_value = PicardReport(
                decay=[DecayPoint(level=0, mean_square=0.5, stderr=0.1)],
                independence_range=12.0,
                coupling_error=(0.01, 0.002),
            )
            yield patched

    def test__nominal(self, runner: CliRunner, mock_pam_picard_logic: mock.AsyncMock) -> None:
        result = runner.invoke(
            app,
            ["pam", "picard", *MODEL_ARGS, "--ell", "2", "--m", "1", "--L", "16", "--grid", "16", "--coupling"],
        )

        assert result.exit_code == 0
        assert result.stdout.startswith("level,mean_square,stderr\n0,0.5,0.1\n")
        assert "Coupling error" in result.stdout
        spec, cfg, replicas, _ = mock_pam_picard_logic.await_args.args
        assert (spec.ell, spec.m) == (2.0, 1)
        assert (cfg.noise, cfg.increment) == (NoiseModel.FACTOR, ItoIncrement.LINEAR)
        assert replicas == 100
        assert mock_pam_picard_logic.await_args.kwargs == {"coupling": True}

    def test__geometry(
        self,
        runner: CliRunner,
        mock_pam_picard_logic: mock.AsyncMock,
        clean_typer_text: TextCleaner,
    ) -> None:
        mock_pam_picard_logic.side_effect = GeometryError("boxes do not fit in half the torus side")

        result = runner.invoke(
            app, ["pam", "picard", *MODEL_ARGS, "--ell", "3", "--m", "1", "--L", "8", "--grid", "16"]
        )

        assert result.exit_code == 1
        assert "Error: boxes do not fit in half the torus side" in clean_typer_text(result.stderr)


class TestPamFkCommand:
    @pytest.fixture
    def mock_pam_fk_logic(self) -> Iterable[mock.AsyncMock]:
        with mock.patch(f"{TARGET_PATH}.pam_fk_logic", new_callable=mock.AsyncMock) as patched:
            patched.return_value = [_moment(2, 1.0), _moment(3, 2.0)]
            yield patched

    def test__nominal(self, runner: CliRunner, mock_pam_fk_logic: mock.AsyncMock) -> None:
        result = runner.invoke(app, ["pam", "fk", *MODEL_ARGS, "--k", "3", "--k", "2", "--k", "3", "--paths", "100"])

        assert result.exit_code == 0
        assert result.stdout.startswith("k,value,log_value,stderr,n_paths,cap\n2,")
        assert "Intermittency" in result.stdout
        orders, _, paths, *_ = mock_pam_fk_logic.await_args.args
        assert orders == [2, 3]
        assert paths == 100

    def test__single_order(self, runner: CliRunner, mock_pam_fk_logic: mock.AsyncMock) -> None:
        mock_pam_fk_logic.return_value = [_moment(2, 1.0)]

        result = runner.invoke(app, ["pam", "fk", *MODEL_ARGS, "--k", "2"])

        assert result.exit_code == 0
        assert "Intermittency" not in result.stdout

    def test__order__invalid(
        self,
        runner: CliRunner,
        mock_pam_fk_logic: mock.AsyncMock,
        clean_typer_text: TextCleaner,
    ) -> None:
        result = runner.invoke(app, ["pam", "fk", *MODEL_ARGS, "--k", "1", "--k", "2"])

        assert result.exit_code == 2
        assert "moment orders must be at least 2" in clean_typer_text(result.output)
        mock_pam_fk_logic.assert_not_awaited()


class TestPamTailsCommand:
    @pytest.fixture
    def mock_pam_tails_logic(self) -> Iterable[mock.AsyncMock]:
        with mock.patch(f"{TARGET_PATH}.pam_tails_logic", new_callable=mock.AsyncMock) as patched:
            patched.return_value = [
                ExceedancePoint(z=0.0, probability=1.0, stderr=0.0, exceedances=10, censored=False),
                ExceedancePoint(z=2.0, probability=0.0, stderr=0.0, exceedances=0, censored=True),
            ]
            yield patched

    def test__nominal(self, runner: CliRunner, mock_pam_tails_logic: mock.AsyncMock) -> None:
        result = runner.invoke(
            app,
            ["pam", "tails", *MODEL_ARGS, "--zmax", "2", "--points", "2", "--replicas", "10", "--L", "8"],
        )

        assert result.exit_code == 0
        assert result.stdout == "z,probability,stderr,exceedances,censored\n0.0,1.0,0.0,10,False\n2.0,0.0,0.0,0,True\n"
        cfg, z_max, points, replicas, _ = mock_pam_tails_logic.await_args.args
        assert (cfg.noise, cfg.increment) == (NoiseModel.SPECTRAL, ItoIncrement.EXPONENTIAL)
        assert (z_max, points, replicas) == (2.0, 2, 10)
