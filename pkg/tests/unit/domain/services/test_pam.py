import dataclasses
import logging
import math

import numpy as np
import pytest

from mfshe.domain.entities.model import ModelParams
from mfshe.domain.entities.pam import MomentEstimate
from mfshe.domain.entities.pam import PamConfig
from mfshe.domain.entities.pam import PicardSpec
from mfshe.domain.exceptions import GeometryError
from mfshe.domain.exceptions import InvalidParametersError
from mfshe.domain.services import kernels
from mfshe.domain.services import pam
from mfshe.domain.types import ItoIncrement
from mfshe.domain.types import NoiseModel


def _estimate(k: int, log_value: float) -> MomentEstimate:
    return MomentEstimate(
        k=k,
        value=math.exp(log_value),
        log_value=log_value,
        stderr=0.0,
        n_paths=10,
        dt_path=0.1,
        cap=100.0,
        t=1.0,
    )


@pytest.fixture
def cfg(params: ModelParams) -> PamConfig:
    return pam.configure_pam(params, torus_side=8.0, grid_n=16, seed=1)


@pytest.fixture
def quiet_cfg(params: ModelParams) -> PamConfig:
    return pam.configure_pam(params, torus_side=8.0, grid_n=16, noise_scale=0.0)


class TestConfigurePam:
    def test__default_step(self, cfg: PamConfig) -> None:
        assert cfg.steps >= pam.MIN_STEPS
        assert cfg.dt <= cfg.dt_bound
        assert cfg.steps * cfg.dt == pytest.approx(cfg.params.t)

    def test__noise_rate(self, params: ModelParams, cfg: PamConfig) -> None:
        rate = pam.noise_rate(params, 8.0, 16, NoiseModel.SPECTRAL)

        assert cfg.dt_bound == pytest.approx(pam.NOISE_STD_LIMIT**2 / rate)
        assert pam.noise_rate(params, 8.0, 16, NoiseModel.SPECTRAL, 2.0) == pytest.approx(4.0 * rate)
        assert pam.noise_rate(params, 8.0, 16, NoiseModel.FACTOR) > 0.0

    def test__no_noise(self, quiet_cfg: PamConfig) -> None:
        assert quiet_cfg.dt_bound == math.inf
        assert quiet_cfg.steps == pam.MIN_STEPS

    def test__unstable_step(self, params: ModelParams) -> None:
        with pytest.raises(InvalidParametersError) as exc_info:
            pam.configure_pam(params, torus_side=8.0, grid_n=16, dt=0.5, noise_scale=10.0)
        assert "exceeds the stability bound" in str(exc_info.value)


class TestStepPam:
    def test__reproducible(self, cfg: PamConfig) -> None:
        state = np.ones(cfg.shape)

        first = pam.step_pam(state, cfg, 5)
        second = pam.step_pam(state, cfg, 5)

        assert first.shape == cfg.shape
        assert np.array_equal(first, second)
        assert not np.array_equal(first, pam.step_pam(state, cfg, 6))

    def test__no_noise_is_heat_flow(self, quiet_cfg: PamConfig) -> None:
        state = np.zeros(quiet_cfg.shape)
        state[0] = 1.0

        stepped = pam.step_pam(state, quiet_cfg, 0)

        assert stepped.sum() == pytest.approx(1.0)
        assert stepped[1] == pytest.approx(stepped[-1])
        assert stepped[0] < 1.0

    @pytest.mark.parametrize(
        ("state", "error_msg"),
        [
            pytest.param(np.ones(8), "must have shape", id="wrong_shape"),
            pytest.param(np.full(16, np.nan), "must be finite", id="not_finite"),
        ],
    )
    def test__invalid_state(self, cfg: PamConfig, state: np.ndarray, error_msg: str) -> None:
        with pytest.raises(InvalidParametersError) as exc_info:
            pam.step_pam(state, cfg, 0)
        assert error_msg in str(exc_info.value)


class TestSimulatePam:
    def test__shape_and_seed(self, cfg: PamConfig) -> None:
        run = pam.simulate_pam(cfg, 3, 7)

        assert run.values.shape == (3, 16)
        assert run.replicas == 3
        assert np.all(np.isfinite(run.values))
        assert np.array_equal(run.values, pam.simulate_pam(cfg, 3, 7).values)

    def test__replicas_use_their_own_stream(self, cfg: PamConfig) -> None:
        single = pam.simulate_pam(cfg, 1, 7)
        several = pam.simulate_pam(cfg, 3, 7)

        assert np.allclose(single.values[0], several.values[0])

    def test__no_noise(self, quiet_cfg: PamConfig) -> None:
        run = pam.simulate_pam(quiet_cfg, 2, 0)

        assert np.allclose(run.values, 1.0)
        assert run.positivity_violations == 0

    def test__linear_increment(self, params: ModelParams) -> None:
        cfg = pam.configure_pam(params, torus_side=8.0, grid_n=16, increment=ItoIncrement.LINEAR)

        assert pam.simulate_pam(cfg, 2, 0).values.shape == (2, 16)

    def test__no_replicas(self, cfg: PamConfig) -> None:
        with pytest.raises(InvalidParametersError):
            pam.simulate_pam(cfg, 0, 0)


class TestTorusStepper:
    @pytest.fixture
    def reference_cfg(self) -> PamConfig:
        params = ModelParams(alpha=1.5, beta=0.5, d=1, t=0.5)
        return pam.configure_pam(params, torus_side=32.0, grid_n=128, seed=3)

    def test__exponential__kernel_nonnegative(self, reference_cfg: PamConfig) -> None:
        radii = kernels.torus_frequencies(reference_cfg.shape, reference_cfg.torus_side)
        spectral = np.fft.ifft(np.exp(-reference_cfg.dt * radii**1.5)).real

        kernel = np.fft.ifft(pam.torus_stepper(reference_cfg).heat).real

        assert spectral.min() < 0.0
        assert kernel.min() >= -1e-12
        assert kernel.sum() == pytest.approx(1.0)
        assert kernel[1] == pytest.approx(kernel[-1])

    def test__linear__spectral_multiplier(self, reference_cfg: PamConfig) -> None:
        cfg = dataclasses.replace(reference_cfg, increment=ItoIncrement.LINEAR)
        radii = kernels.torus_frequencies(cfg.shape, cfg.torus_side)

        heat = pam.torus_stepper(cfg).heat

        np.testing.assert_allclose(heat, np.exp(-cfg.dt * radii**1.5))

    def test__exponential__positive(self, reference_cfg: PamConfig) -> None:
        run = pam.simulate_pam(reference_cfg, 16, 0)

        assert run.positivity_violations == 0
        assert np.all(run.values > 0.0)

    @pytest.mark.slow
    def test__exponential__mean_one(self, reference_cfg: PamConfig) -> None:
        replicas = 400
        averages = pam.simulate_pam(reference_cfg, replicas, 1).values.mean(axis=1)

        stderr = averages.std(ddof=1) / math.sqrt(replicas)
        assert abs(averages.mean() - 1.0) <= 3.0 * stderr

    @pytest.mark.slow
    def test__second_moment__feynman_kac(self) -> None:
        params = ModelParams(alpha=1.5, beta=0.5, d=1, t=0.05)
        cfg = pam.configure_pam(params, torus_side=8.0, grid_n=128)
        replicas = 2000
        squares = (pam.simulate_pam(cfg, replicas, 2).values ** 2).mean(axis=1)
        second, second_se = squares.mean(), squares.std(ddof=1) / math.sqrt(replicas)

        estimate = pam.fk_moment(2, params, 20_000, 0.001, 100.0, 2)

        # the lattice cuts the kernel below the spacing, worth a few percent at this t
        allowance = 0.15 * estimate.value
        assert abs(second - estimate.value) <= 3.0 * math.hypot(second_se, estimate.stderr) + allowance


class TestPicard:
    @pytest.fixture
    def wide_cfg(self, params: ModelParams) -> PamConfig:
        return pam.configure_pam(params, torus_side=16.0, grid_n=16, seed=2)

    def test__ladder(self, params: ModelParams, wide_cfg: PamConfig) -> None:
        spec = PicardSpec(ell=2.0, m=2, params=params)

        ladder = pam.picard_ladder(spec, wide_cfg, [[0.0], [3.0]], 4)

        assert len(ladder) == 3
        assert ladder[0].tolist() == [1.0, 1.0]
        assert np.all(np.isfinite(ladder[2]))
        assert np.array_equal(pam.picard_iterate(spec, wide_cfg, [[0.0], [3.0]], 4), ladder[-1])

    def test__replicas(self, params: ModelParams, wide_cfg: PamConfig) -> None:
        spec = PicardSpec(ell=2.0, m=1, params=params)

        replicas = list(pam.picard_replicas(spec, wide_cfg, 2, 0))

        assert len(replicas) == 2
        assert replicas[0][1].shape == (16,)
        assert not np.array_equal(replicas[0][1], replicas[1][1])

    def test__decay(self, params: ModelParams, wide_cfg: PamConfig) -> None:
        points = pam.picard_decay(PicardSpec(ell=2.0, m=2, params=params), wide_cfg, 3, 0)

        assert [point.level for point in points] == [0, 1]
        assert all(point.mean_square > 0.0 and point.stderr >= 0.0 for point in points)

    def test__geometry(self, params: ModelParams, cfg: PamConfig) -> None:
        with pytest.raises(GeometryError):
            pam.picard_ladder(PicardSpec(ell=3.0, m=1, params=params), cfg, [[0.0]], 0)

    def test__different_model(self, params_2d: ModelParams, cfg: PamConfig) -> None:
        with pytest.raises(InvalidParametersError):
            pam.picard_ladder(PicardSpec(ell=2.0, m=1, params=params_2d), cfg, [[0.0]], 0)

    def test__reference_config(self, cfg: PamConfig) -> None:
        reference = pam.reference_config(cfg)

        assert reference.noise is NoiseModel.FACTOR
        assert reference.increment is ItoIncrement.LINEAR
        assert reference.steps % cfg.steps == 0
        assert reference.dt <= reference.dt_bound

    def test__reference_config__same_grid(self, params: ModelParams) -> None:
        cfg = pam.configure_pam(params, torus_side=8.0, grid_n=16, noise=NoiseModel.FACTOR)

        assert pam.reference_config(cfg).dt == pytest.approx(cfg.dt)

    @pytest.fixture
    def bound_cfg(self, params: ModelParams) -> PamConfig:
        # spectral noise scaled down so that its own bound is three factor-noise bounds
        dt = 3.0 * pam.NOISE_STD_LIMIT**2 / pam.noise_rate(params, 16.0, 16, NoiseModel.FACTOR)
        scale = math.sqrt(pam.NOISE_STD_LIMIT**2 / (dt * pam.noise_rate(params, 16.0, 16, NoiseModel.SPECTRAL)))
        return pam.configure_pam(params.at_time(10.0 * dt), torus_side=16.0, grid_n=16, dt=dt, noise_scale=scale)

    def test__reference_config__refines_steps(self, bound_cfg: PamConfig) -> None:
        reference = pam.reference_config(bound_cfg)

        assert bound_cfg.dt == pytest.approx(bound_cfg.dt_bound)
        assert reference.steps >= 3 * bound_cfg.steps
        assert reference.steps % bound_cfg.steps == 0
        assert reference.dt <= reference.dt_bound * (1.0 + 1e-9)

    def test__coupling_error__refined_steps(self, bound_cfg: PamConfig) -> None:
        mean, stderr = pam.coupling_error(PicardSpec(ell=2.0, m=2, params=bound_cfg.params), bound_cfg, 2, 0)

        assert math.isfinite(mean) and mean >= 0.0
        assert stderr >= 0.0

    def test__fine_grid__not_a_refinement(self, params: ModelParams, wide_cfg: PamConfig) -> None:
        fine = pam.configure_pam(params, torus_side=16.0, grid_n=16, dt=params.t / (wide_cfg.steps + 1))
        spec = PicardSpec(ell=2.0, m=1, params=params)

        with pytest.raises(InvalidParametersError):
            next(pam.picard_replicas(spec, wide_cfg, 1, 0, fine=fine))

    def test__converges_to_solver(self) -> None:
        params = ModelParams(alpha=1.5, beta=0.5, d=1, t=0.05)
        cfg = pam.configure_pam(
            params, torus_side=8.0, grid_n=32, noise=NoiseModel.FACTOR, increment=ItoIncrement.LINEAR
        )
        spec = PicardSpec(ell=2.0, m=cfg.steps, params=params)

        levels = next(pam.picard_replicas(spec, cfg, 1, 5, truncate=False))
        solver = pam.simulate_pam(cfg, 1, 5).values[0]

        gaps = [float(np.mean((level - solver) ** 2)) for level in levels]
        assert gaps[-1] < 1e-20 < gaps[0]
        assert gaps[1] > gaps[-1]

    @pytest.mark.slow
    def test__first_iterate__variance_below_field(self) -> None:
        params = ModelParams(alpha=1.5, beta=0.5, d=1, t=0.5)
        cfg = pam.configure_pam(
            params, torus_side=16.0, grid_n=64, noise=NoiseModel.FACTOR, increment=ItoIncrement.LINEAR
        )
        replicas = 200

        squares = np.array(
            [
                np.mean((levels[1] - 1.0) ** 2)
                for levels in pam.picard_replicas(PicardSpec(ell=2.0, m=1, params=params), cfg, replicas, 4)
            ]
        )

        stderr = squares.std(ddof=1) / math.sqrt(replicas)
        assert squares.mean() - 3.0 * stderr <= kernels.variance(params)

    @pytest.mark.parametrize(
        ("ell", "m", "expected"),
        [
            pytest.param(2.0, 1, 8.0, id="single_iteration"),
            pytest.param(3.0, 5, 60.0, id="five_iterations"),
        ],
    )
    def test__independence_range(self, params: ModelParams, ell: float, m: int, expected: float) -> None:
        assert pam.independence_range(PicardSpec(ell=ell, m=m, params=params)) == pytest.approx(expected)

    @pytest.mark.parametrize(
        ("ell", "m"),
        [
            pytest.param(1.0, 2, id="ell_not_above_one"),
            pytest.param(2.0, 0, id="no_iteration"),
        ],
    )
    def test__independence_range__invalid(self, params: ModelParams, ell: float, m: int) -> None:
        with pytest.raises(InvalidParametersError):
            pam.independence_range(PicardSpec(ell=ell, m=m, params=params))

    @pytest.mark.slow
    def test__coupling_error(self, params: ModelParams, wide_cfg: PamConfig) -> None:
        mean, stderr = pam.coupling_error(PicardSpec(ell=4.0, m=6, params=params), wide_cfg, 4, 0)

        assert mean >= 0.0
        assert stderr >= 0.0


class TestFeynmanKac:
    def test__constant_kernel(self, params: ModelParams) -> None:
        estimate = pam.fk_moment(3, params, 10, 0.1, 100.0, 0, constant_kernel=0.5)

        assert estimate.log_value == pytest.approx(1.5)
        assert estimate.value == pytest.approx(math.exp(1.5))
        assert estimate.stderr == pytest.approx(0.0)

    def test__capped(self, params: ModelParams) -> None:
        estimate = pam.fk_moment(2, params, 200, 0.1, 50.0, 3)

        assert 0.0 < estimate.log_value <= 50.0 * params.t
        assert estimate.k == 2
        assert estimate.dt_path == pytest.approx(0.1)

    def test__cap_sweep__nondecreasing(self, params: ModelParams) -> None:
        estimates = pam.fk_moment_cap_sweep(2, params, 100, 0.1, 1, caps=[100.0, 1.0, 10.0])

        assert [estimate.cap for estimate in estimates] == [1.0, 10.0, 100.0]
        logs = [estimate.log_value for estimate in estimates]
        assert logs == sorted(logs)

    def test__cap_dominates_step__warns(self, params: ModelParams, caplog: pytest.LogCaptureFixture) -> None:
        with caplog.at_level(logging.WARNING):
            pam.fk_moment(2, params, 20, 0.1, 50.0, 3)

        assert "Kernel cap dominates single path steps" in caplog.text

    @pytest.mark.slow
    def test__intermittency_exponent(self) -> None:
        params = ModelParams(alpha=1.5, beta=0.5, d=1, t=0.25)
        estimates = [pam.fk_moment(k, params, 20_000, 0.005, 100.0, 0) for k in (2, 3, 4, 5)]

        q, _ = pam.intermittency_fit(estimates)

        assert q == pytest.approx(params.moment_exponent, abs=0.4)

    @pytest.mark.parametrize(
        ("k", "n_paths", "cap"),
        [
            pytest.param(1, 10, 10.0, id="first_moment"),
            pytest.param(2, 1, 10.0, id="single_path"),
            pytest.param(2, 10, 0.0, id="zero_cap"),
        ],
    )
    def test__invalid(self, params: ModelParams, k: int, n_paths: int, cap: float) -> None:
        with pytest.raises(InvalidParametersError):
            pam.fk_moment(k, params, n_paths, 0.1, cap, 0)


class TestMomentAnalysis:
    def test__moment_constants(self) -> None:
        c_bar, c_upper = pam.moment_constants(ModelParams(alpha=2.0, beta=1.0, d=2, t=1.0))

        assert c_bar == pytest.approx(2.0 * math.pi)
        assert c_upper == pytest.approx(8.0 * math.pi**2)

    def test__intermittency_fit(self) -> None:
        estimates = [_estimate(k, 0.7 * k**2.5) for k in (2, 3, 4)]

        q, prefactor = pam.intermittency_fit(estimates)

        assert q == pytest.approx(2.5)
        assert prefactor == pytest.approx(0.7)

    def test__intermittency_fit__too_few(self) -> None:
        with pytest.raises(InvalidParametersError):
            pam.intermittency_fit([_estimate(2, 1.0), _estimate(3, -0.5)])

    def test__moment_bracket(self, params: ModelParams) -> None:
        estimates = [_estimate(2, 0.7 * 2**2.5), _estimate(3, 0.9 * 3**2.5)]

        bracket = pam.moment_bracket(estimates, params)

        assert bracket.q == pytest.approx(2.5)
        assert (bracket.c_lower, bracket.c_upper) == pytest.approx((0.7, 0.9))

    def test__moment_bracket__empty(self, params: ModelParams) -> None:
        with pytest.raises(InvalidParametersError):
            pam.moment_bracket([], params)

    def test__tail_constants(self, params: ModelParams) -> None:
        c_small, c_big = pam.tail_constants(params, 0.5, 2.0)

        assert 0.0 < c_small < c_big

    @pytest.mark.parametrize(
        ("c_lower", "c_upper"),
        [
            pytest.param(0.0, 1.0, id="zero_lower"),
            pytest.param(2.0, 1.0, id="reversed"),
        ],
    )
    def test__tail_constants__invalid(self, params: ModelParams, c_lower: float, c_upper: float) -> None:
        with pytest.raises(InvalidParametersError):
            pam.tail_constants(params, c_lower, c_upper)

    def test__limsup_bracket(self, params: ModelParams) -> None:
        lower, upper = pam.pam_limsup_bracket(params, 0.5, 2.0)

        assert lower == pytest.approx(0.5**0.6)
        assert upper == pytest.approx(2.0**0.6)


class TestLocalization:
    def test__first_shell(self, params: ModelParams) -> None:
        schedule = pam.localization_schedule(params, 1)

        assert schedule.ell == pytest.approx(math.e)
        assert schedule.m == 1
        assert schedule.k == 2

    def test__grows_with_n(self, params: ModelParams) -> None:
        early = pam.localization_schedule(params, 2)
        late = pam.localization_schedule(params, 20)

        assert late.ell > early.ell
        assert late.m >= early.m

    @pytest.mark.parametrize("n", [0, 5000])
    def test__invalid(self, params: ModelParams, n: int) -> None:
        with pytest.raises(InvalidParametersError):
            pam.localization_schedule(params, n)

    def test__coupling_bound(self, params: ModelParams) -> None:
        loose = pam.coupling_bound(params, math.e, 1, 2, 2.0, 1.0)
        tight = pam.coupling_bound(params, math.e**10, 20, 2, 2.0, 1.0)

        assert 0.0 < tight < loose

    def test__coupling_bound__overflow(self, params: ModelParams) -> None:
        assert pam.coupling_bound(params, math.e, 1, 2, 2.0, 1e6) == math.inf


class TestTailProbability:
    def test__no_noise(self, params: ModelParams, quiet_cfg: PamConfig) -> None:
        points = pam.tail_probability(params, [-1.0, 1.0], 30, quiet_cfg, 0)

        assert [point.probability for point in points] == [1.0, 0.0]
        assert [point.censored for point in points] == [False, True]
        assert points[0].exceedances == 30

    def test__different_model(self, params_2d: ModelParams, cfg: PamConfig) -> None:
        with pytest.raises(InvalidParametersError):
            pam.tail_probability(params_2d, [0.0], 10, cfg, 0)
