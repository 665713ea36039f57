import math
from dataclasses import dataclass
from dataclasses import field
from pathlib import Path
from typing import Any

from mfshe.domain.entities.fractal import DimensionEstimate
from mfshe.domain.exceptions import InvalidParametersError
from mfshe.domain.types import ExperimentKind


@dataclass(frozen=True, kw_only=True)
class GammaEstimate:
    """Dimension estimate of the peak set at one gauge level."""

    gamma: float
    estimate: DimensionEstimate
    peaks: int

    def as_row(self) -> dict[str, Any]:
        return {
            "gamma": self.gamma,
            "estimate": self.estimate.value,
            "band": self.estimate.band,
            "stderr": self.estimate.stderr,
            "n_min": self.estimate.n_min,
            "n_max": self.estimate.n_max,
            "degenerate": self.estimate.degenerate,
            "peaks": self.peaks,
        }


@dataclass(frozen=True, kw_only=True)
class ShellMaximum:
    n: int
    sites: int
    maximum: float

    @property
    def ratio(self) -> float:
        """Normalized maximum over sqrt(n)."""
        return self.maximum / math.sqrt(self.n)


@dataclass(frozen=True, kw_only=True)
class ValidationCheck:
    """Outcome of one acceptance check. Informational checks never fail a suite."""

    name: str
    passed: bool
    measured: float
    expected: float
    tolerance: float
    required: bool = True
    detail: str = ""

    def as_row(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "measured": self.measured,
            "expected": self.expected,
            "tolerance": self.tolerance,
            "required": self.required,
            "detail": self.detail,
        }


@dataclass(frozen=True, kw_only=True)
class RunRecord:
    """Traceable outcome of one harness run.

    ``artifacts`` are paths relative to ``directory``; every number of ``summary`` is recomputable
    from them.
    """

    run_id: str
    kind: ExperimentKind
    config_hash: str
    directory: Path
    seed: int
    timings: dict[str, float] = field(default_factory=dict)
    artifacts: tuple[str, ...] = ()
    summary: dict[str, Any] = field(default_factory=dict)
    failure: str | None = None

    def __post_init__(self) -> None:
        if len(self.config_hash) != 64:
            raise InvalidParametersError(f"config_hash must be a sha256 hex digest, got {self.config_hash!r}")
        if any(Path(artifact).is_absolute() for artifact in self.artifacts):
            raise InvalidParametersError("artifact paths must be relative to the run directory")

    @property
    def failed(self) -> bool:
        return self.failure is not None

    @property
    def short_hash(self) -> str:
        return self.config_hash[:8]
