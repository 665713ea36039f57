import math
from dataclasses import dataclass
from dataclasses import replace
from typing import Self

from mfshe.domain.exceptions import InvalidParametersError
from mfshe.domain.exceptions import SingularInputError


@dataclass(frozen=True, kw_only=True)
class ModelParams:
    """Parameters (alpha, beta, d, t) of the fractional stochastic heat equation.

    Construction enforces the admissibility condition 0 < beta < min(alpha, d) with alpha in (0, 2].
    """

    alpha: float
    beta: float
    d: int
    t: float

    def __post_init__(self) -> None:
        if isinstance(self.d, bool) or int(self.d) != self.d or self.d < 1:
            raise InvalidParametersError(f"d must be a positive integer, got {self.d!r}")
        if not 0.0 < self.alpha <= 2.0:
            raise InvalidParametersError(f"alpha must lie in (0, 2], got {self.alpha!r}")
        if not 0.0 < self.beta < min(self.alpha, self.d):
            raise InvalidParametersError(
                f"beta must satisfy 0 < beta < min(alpha, d) = {min(self.alpha, self.d)}, got {self.beta!r}"
            )
        if not (self.t > 0.0 and math.isfinite(self.t)):
            raise InvalidParametersError(f"t must be a positive finite time, got {self.t!r}")

    @property
    def time_exponent(self) -> float:
        """Exponent (alpha - beta) / alpha of the variance growth in t."""
        return (self.alpha - self.beta) / self.alpha

    @property
    def moment_exponent(self) -> float:
        """Exponent (2 alpha - beta) / (alpha - beta) of the moment growth in k."""
        return (2.0 * self.alpha - self.beta) / (self.alpha - self.beta)

    @property
    def tail_exponent(self) -> float:
        """Stretched-exponential order (2 alpha - beta) / alpha of the tails of log u_t."""
        return (2.0 * self.alpha - self.beta) / self.alpha

    @property
    def gauge_exponent(self) -> float:
        return self.alpha / (2.0 * self.alpha - self.beta)

    @property
    def time_scale(self) -> float:
        """Diffusive length t^{1/alpha}."""
        return self.t ** (1.0 / self.alpha)

    def at_time(self, t: float) -> Self:
        return replace(self, t=t)


@dataclass(frozen=True, kw_only=True)
class KernelFactorization:
    """Square-root factor h of the Riesz kernel and its truncation h_ell.

    ``amplitude`` is (c_{beta,d})^{1/2} so that ``factor`` reproduces c^{1/2} |x|^{-(d+beta)/2}.
    ``coupling_amplitude`` is the constant for which h * h equals the Riesz kernel exactly under
    the fixed Fourier convention; the noise coupling uses it.
    """

    params: ModelParams
    cutoff: float = math.inf
    amplitude: float
    coupling_amplitude: float

    def __post_init__(self) -> None:
        if not self.cutoff > 0.0:
            raise InvalidParametersError(f"cutoff must be positive, got {self.cutoff!r}")
        if not (self.amplitude > 0.0 and self.coupling_amplitude > 0.0):
            raise InvalidParametersError("factor amplitudes must be positive")

    @property
    def exponent(self) -> float:
        return (self.params.d + self.params.beta) / 2.0

    @property
    def coupling_scale(self) -> float:
        return self.coupling_amplitude / self.amplitude

    def factor(self, radius: float) -> float:
        if radius < 0.0:
            raise InvalidParametersError(f"radius must be nonnegative, got {radius!r}")
        if radius == 0.0:
            raise SingularInputError("the factor h is singular at the origin")
        return self.amplitude * radius ** (-self.exponent)

    def truncated(self, radius: float) -> float:
        return 0.0 if radius > self.cutoff else self.factor(radius)

    def tail(self, radius: float) -> float:
        return self.factor(radius) - self.truncated(radius)

    def coupled_factor(self, radius: float) -> float:
        return self.coupling_scale * self.truncated(radius)

    def origin_cell_average(self, cell_side: float) -> float:
        """Average of the coupled factor over the cell of volume cell_side^d centred at 0.

        The cell is replaced by the ball of equal volume, for which the radial integral is explicit.
        """
        d = self.params.d
        ball_radius = cell_side * (math.gamma(d / 2.0 + 1.0) / math.pi ** (d / 2.0)) ** (1.0 / d)
        sphere = 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)
        radial = ball_radius ** (d - self.exponent) / (d - self.exponent)
        return self.coupling_amplitude * sphere * radial / cell_side**d


@dataclass(frozen=True, kw_only=True)
class VarianceConstantReport:
    quadrature: float
    closed_form: float
    printed: float

    @property
    def ratio(self) -> float:
        """Printed constant divided by the constant of this implementation."""
        return self.printed / self.quadrature
