import hashlib
from pathlib import Path
from typing import Annotated
from typing import Final
from typing import Self

from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import Field
from pydantic import NonNegativeInt
from pydantic import PositiveFloat
from pydantic import PositiveInt
from pydantic import model_validator

from mfshe.domain.entities.model import ModelParams
from mfshe.domain.types import CoverScheme
from mfshe.domain.types import ExperimentKind
from mfshe.domain.types import ItoIncrement
from mfshe.domain.types import NoiseModel
from mfshe.domain.types import SamplerScheme

DEFAULT_GAMMA_FRACTIONS: Final[tuple[float, ...]] = (0.1, 0.25, 0.5, 0.75, 0.9)
MIN_SHELLS: Final[int] = 4
MAX_EXACT_SHELL: Final[int] = 10
MAX_PAM_SHELL: Final[int] = 10


class ConfigSection(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ModelSection(ConfigSection):
    alpha: Annotated[float, Field(gt=0.0, le=2.0)]
    beta: PositiveFloat
    d: PositiveInt
    t: PositiveFloat = 1.0

    @model_validator(mode="after")
    def validate_admissibility(self) -> Self:
        self.to_params()
        return self

    def to_params(self) -> ModelParams:
        return ModelParams(alpha=self.alpha, beta=self.beta, d=self.d, t=self.t)


class SamplerSection(ConfigSection):
    """Field sampler, cover scheme and Monte Carlo sizes.

    The ``pam_*`` keys drive the per-shell torus patches and the ``fk_*`` keys the Feynman-Kac
    moment estimates.
    """

    scheme: SamplerScheme = SamplerScheme.BLOCK_INDEPENDENT
    block: PositiveInt | None = None
    padding: Annotated[int, Field(ge=2)] = 2
    cross_block_tolerance: Annotated[float, Field(gt=0.0, lt=1.0)] = 0.01
    cover: CoverScheme = CoverScheme.UNIT_LATTICE
    rho_grid: Annotated[list[PositiveFloat], Field(min_length=1)] = [0.25, 0.5, 0.75, 1.0]
    replicas: PositiveInt = 1000

    pam_margin: PositiveInt = 64
    pam_noise: NoiseModel = NoiseModel.SPECTRAL
    pam_increment: ItoIncrement = ItoIncrement.EXPONENTIAL
    pam_dt: PositiveFloat | None = None
    pam_dt_factor: PositiveFloat = 1.0

    fk_orders: Annotated[list[Annotated[int, Field(ge=2)]], Field(min_length=2)] = [2, 3, 4, 5]
    fk_paths: Annotated[int, Field(ge=2)] = 20_000
    fk_dt: PositiveFloat = 0.005
    fk_cap: PositiveFloat = 1e2


class ShellsSection(ConfigSection):
    n_min: PositiveInt
    n_max: PositiveInt

    @model_validator(mode="after")
    def validate_range(self) -> Self:
        if self.n_max - self.n_min + 1 < MIN_SHELLS:
            raise ValueError(f"the shell range must hold at least {MIN_SHELLS} shells")
        return self

    @property
    def indices(self) -> range:
        return range(self.n_min, self.n_max + 1)


class GaugeSection(ConfigSection):
    gammas: list[Annotated[float, Field(ge=0.0)]] | None = None

    def grid(self, d: int) -> list[float]:
        """Configured levels in increasing order, or the default fractions of d."""
        if self.gammas is None:
            return [fraction * d for fraction in DEFAULT_GAMMA_FRACTIONS]
        return sorted(set(self.gammas))


class OutputSection(ConfigSection):
    directory: Path | None = None
    plots: bool = True


class ExperimentConfig(ConfigSection):
    """Experiment configuration, as read from a TOML file.

    Unknown keys are errors; admissibility and the sampler feasibility rules are checked before
    any computation starts.
    """

    id: Annotated[str, Field(pattern=r"^[A-Za-z0-9][A-Za-z0-9_.-]*$", max_length=64)]
    kind: ExperimentKind
    seed: NonNegativeInt = 0

    model: ModelSection
    sampler: SamplerSection = SamplerSection()
    shells: ShellsSection
    gauge: GaugeSection = GaugeSection()
    output: OutputSection = OutputSection()

    @model_validator(mode="after")
    def validate_feasibility(self) -> Self:
        params = self.model.to_params()
        scheme = self.sampler.scheme
        if scheme in (SamplerScheme.CIRCULANT_EXACT, SamplerScheme.BLOCK_INDEPENDENT) and params.d > 2:
            raise ValueError(f"the {scheme} sampler is offered for d in {{1, 2}} only")
        if scheme is SamplerScheme.CIRCULANT_EXACT and self.shells.n_max > MAX_EXACT_SHELL:
            raise ValueError(f"exact sampling stops at shell {MAX_EXACT_SHELL}; use the block-independent sampler")
        if self.sampler.block is not None and not self.sampler.block > 2.0 * params.time_scale:
            raise ValueError(f"block must exceed twice the diffusive length {params.time_scale}")
        if self.kind is ExperimentKind.PAM_DIMENSION:
            if params.d != 1:
                raise ValueError("the PAM dimension experiment runs in d = 1")
            if self.shells.n_max > MAX_PAM_SHELL:
                raise ValueError(f"PAM shells stop at {MAX_PAM_SHELL}")
            if len(set(self.sampler.fk_orders)) < 2:
                raise ValueError("the moment bracket needs at least two distinct orders")
        return self

    def params(self) -> ModelParams:
        return self.model.to_params()

    def gammas(self) -> list[float]:
        return self.gauge.grid(self.model.d)

    def digest(self) -> str:
        """sha256 of the canonical JSON form, output location excluded."""
        return hashlib.sha256(self.model_dump_json(exclude={"output"}).encode()).hexdigest()

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return self.model_validate(self.model_dump() | {"seed": seed})
