import math

import numpy as np
import pytest

from mfshe.domain.entities.fractal import Cube
from mfshe.domain.entities.fractal import DimensionEstimate
from mfshe.domain.entities.fractal import GaugeRule
from mfshe.domain.entities.fractal import PeakSet
from mfshe.domain.entities.fractal import Shell
from mfshe.domain.entities.fractal import SkeletonSpec
from mfshe.domain.exceptions import InvalidParametersError
from mfshe.domain.types import GaugeKind


class TestShell:
    @pytest.mark.parametrize(
        ("point", "expected"),
        [
            pytest.param(0.0, 0, id="origin"),
            pytest.param(0.5, 0, id="inside_first_box"),
            pytest.param(1.0, 1, id="right_edge_of_first_box"),
            pytest.param(2.0, 1, id="two"),
            pytest.param(3.0, 2, id="beyond_e"),
            pytest.param(-1.0, 0, id="left_edge_of_first_box"),
            pytest.param(-2.0, 1, id="minus_two"),
            pytest.param(-3.0, 2, id="minus_three"),
        ],
    )
    def test__index_of__1d(self, point: float, expected: int) -> None:
        assert Shell.index_of([point], 1).tolist() == [expected]

    def test__index_of__max_over_coordinates(self) -> None:
        assert Shell.index_of([[0, 0], [1, -3], [-20, 2]], 2).tolist() == [0, 2, 3]

    def test__index_of__empty(self) -> None:
        assert Shell.index_of(np.zeros((0, 2)), 2).shape == (0,)

    def test__index_of__wrong_shape(self) -> None:
        with pytest.raises(InvalidParametersError):
            Shell.index_of([[1, 2, 3]], 2)

    def test__bounds(self) -> None:
        shell = Shell(n=2, d=1)

        assert shell.outer == pytest.approx(math.e**2)
        assert shell.inner == pytest.approx(math.e)
        assert Shell(n=0, d=1).inner == 0.0

    def test__contains(self) -> None:
        assert Shell(n=2, d=1).contains([3, 7, 8, -3]).tolist() == [True, True, False, True]

    def test__invalid(self) -> None:
        with pytest.raises(InvalidParametersError):
            Shell(n=-1, d=1)


class TestCube:
    def test__half_open(self) -> None:
        cube = Cube(corner=(0.0, 0.0), side=2.0)

        assert cube.d == 2
        assert cube.contains([[0, 0], [1.9, 1.9], [2, 0], [-0.1, 1]]).tolist() == [True, True, False, False]

    def test__side_below_one(self) -> None:
        with pytest.raises(InvalidParametersError):
            Cube(corner=(0.0,), side=0.5)


class TestGaugeRule:
    def test__log_plus(self) -> None:
        assert GaugeRule.log_plus([0.0, 1.0, math.e, math.e**3]).tolist() == pytest.approx([1.0, 1.0, 1.0, 3.0])

    def test__threshold__linear(self) -> None:
        rule = GaugeRule(kind=GaugeKind.LINEAR_SHE, gamma=0.5, variance=2.0)

        assert rule.threshold([math.e**3]).tolist() == pytest.approx([math.sqrt(2.0 * 2.0 * 0.5 * 3.0)])
        assert rule.threshold([0.0]).tolist() == pytest.approx([math.sqrt(2.0)])

    def test__threshold__pam(self) -> None:
        rule = GaugeRule(kind=GaugeKind.PAM, gamma=2.0, time_factor=0.5, power=0.6)

        assert rule.threshold([math.e**8]).tolist() == pytest.approx([2.0 * 0.5 * 8.0**0.6])

    def test__statistic(self) -> None:
        linear = GaugeRule(kind=GaugeKind.LINEAR_SHE, gamma=1.0)
        pam = GaugeRule(kind=GaugeKind.PAM, gamma=1.0)

        assert linear.statistic([-1.0, 2.0]).tolist() == [-1.0, 2.0]
        assert pam.statistic([1.0, math.e**2]).tolist() == pytest.approx([1.0, 2.0])

    @pytest.mark.parametrize(
        "kwargs",
        [
            pytest.param({"gamma": -0.1}, id="negative_gamma"),
            pytest.param({"gamma": 1.0, "variance": 0.0}, id="zero_variance"),
            pytest.param({"gamma": 1.0, "power": 0.0}, id="zero_power"),
        ],
    )
    def test__invalid(self, kwargs: dict) -> None:
        with pytest.raises(InvalidParametersError):
            GaugeRule(kind=GaugeKind.LINEAR_SHE, **kwargs)


class TestPeakSet:
    def test__from_points__dedup_and_tags(self) -> None:
        peaks = PeakSet.from_points([[3], [3], [7], [-2], [0]], 1, gauge=GaugeKind.PAM, gamma=0.5)

        assert len(peaks) == 4
        assert peaks.points[:, 0].tolist() == [-2, 0, 3, 7]
        assert peaks.shells.tolist() == [1, 0, 2, 2]
        assert peaks.gauge is GaugeKind.PAM
        assert peaks.gamma == 0.5

    def test__shell_counts(self) -> None:
        peaks = PeakSet.from_points([[3], [4], [7], [1], [30]], 1)

        assert peaks.shell_counts() == {1: 1, 2: 3, 4: 1}
        assert peaks.in_shell(2)[:, 0].tolist() == [3, 4, 7]
        assert peaks.in_shell(3).shape == (0, 1)

    def test__duplicates(self) -> None:
        with pytest.raises(InvalidParametersError) as exc_info:
            PeakSet(d=1, points=np.array([[3], [3]]), shells=np.array([2, 2]))
        assert "distinct" in str(exc_info.value)

    def test__wrong_tag(self) -> None:
        with pytest.raises(InvalidParametersError) as exc_info:
            PeakSet(d=1, points=np.array([[3]]), shells=np.array([1]))
        assert "wrong shell" in str(exc_info.value)

    def test__missing_tag(self) -> None:
        with pytest.raises(InvalidParametersError):
            PeakSet(d=1, points=np.array([[3], [4]]), shells=np.array([2]))

    def test__empty(self) -> None:
        peaks = PeakSet.from_points([], 2)

        assert len(peaks) == 0
        assert peaks.shell_counts() == {}


class TestSkeletonSpec:
    def test__sizes(self) -> None:
        spec = SkeletonSpec(theta=0.5, n=2, d=1)

        assert spec.points_per_axis == 3
        assert spec.cube_side == pytest.approx(math.e)

    @pytest.mark.parametrize("theta", [0.0, 1.0, -0.5])
    def test__theta__invalid(self, theta: float) -> None:
        with pytest.raises(InvalidParametersError):
            SkeletonSpec(theta=theta, n=2, d=1)


class TestDimensionEstimate:
    def test__interval(self) -> None:
        estimate = DimensionEstimate(value=0.5, band=0.2, stderr=0.05, intercept=0.0, n_min=2, n_max=8)

        assert estimate.interval == pytest.approx((0.3, 0.7))
        assert not estimate.degenerate
