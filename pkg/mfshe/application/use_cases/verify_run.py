import logging
import math
from dataclasses import dataclass
from dataclasses import field
from pathlib import Path
from typing import Any

from mfshe.application.use_cases.linear_dimension import fit_peaks
from mfshe.application.use_cases.linear_dimension import peaks_name
from mfshe.application.use_cases.linear_limsup import limsup_summary
from mfshe.domain.entities.experiment import ShellMaximum
from mfshe.domain.ports.runs import RunRepository
from mfshe.domain.schemas.experiment import ExperimentConfig
from mfshe.domain.types import ExperimentKind

logger = logging.getLogger(__name__)


@dataclass(frozen=True, kw_only=True)
class Mismatch:
    quantity: str
    recorded: Any
    recomputed: Any


@dataclass(frozen=True, kw_only=True)
class VerifyReport:
    run_dir: Path
    kind: ExperimentKind
    checked: int = 0
    mismatches: list[Mismatch] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches


@dataclass(frozen=True, kw_only=True)
class RunReport:
    config: ExperimentConfig
    summary: dict[str, Any]
    tables: dict[str, list[dict[str, str]]]


def same(recorded: Any, recomputed: Any) -> bool:
    if isinstance(recorded, bool) or isinstance(recomputed, bool) or recorded is None or recomputed is None:
        return recorded == recomputed
    recorded, recomputed = float(recorded), float(recomputed)
    if math.isnan(recorded) or math.isnan(recomputed):
        return math.isnan(recorded) and math.isnan(recomputed)
    return math.isclose(recorded, recomputed, rel_tol=1e-9, abs_tol=1e-12)


def _parse(value: str) -> Any:
    if value in ("True", "False"):
        return value == "True"
    try:
        return float(value)
    except ValueError:
        return value


class VerifyRunUseCase:
    """Recomputes the summary statistics of a run from its persisted raw files."""

    def __init__(self, repository: RunRepository) -> None:
        self._repository = repository

    async def execute(self, run_dir: Path) -> VerifyReport:
        config = await self._repository.load_config(run_dir)
        summary = await self._repository.load_summary(run_dir)
        pairs: list[tuple[str, Any, Any]] = [("config_hash", summary.get("config_hash"), config.digest())]
        if summary.get("failure"):
            pairs.append(("failure", summary["failure"], None))

        match config.kind:
            case ExperimentKind.LINEAR_DIMENSION | ExperimentKind.PAM_DIMENSION:
                pairs += await self._dimension_pairs(run_dir, config, summary)
            case ExperimentKind.LINEAR_LIMSUP:
                pairs += await self._limsup_pairs(run_dir, config, summary)
            case ExperimentKind.VALIDATION:
                pairs += await self._validation_pairs(run_dir, summary)

        mismatches = [
            Mismatch(quantity=name, recorded=recorded, recomputed=recomputed)
            for name, recorded, recomputed in pairs
            if not same(recorded, recomputed)
        ]
        if mismatches:
            logger.warning("Run does not verify", extra={"run_dir": str(run_dir), "mismatches": len(mismatches)})
        return VerifyReport(run_dir=run_dir, kind=config.kind, checked=len(pairs), mismatches=mismatches)

    async def _dimension_pairs(
        self,
        run_dir: Path,
        config: ExperimentConfig,
        summary: dict[str, Any],
    ) -> list[tuple[str, Any, Any]]:
        pairs = []
        for row in summary.get("estimates", []):
            gamma = float(row["gamma"])
            peaks = await self._repository.load_peaks(run_dir, peaks_name(gamma))
            _, recomputed = fit_peaks(config, peaks)
            for key, value in recomputed.as_row().items():
                pairs.append((f"gamma={gamma:g}.{key}", row.get(key), value))
        return pairs

    async def _limsup_pairs(
        self,
        run_dir: Path,
        config: ExperimentConfig,
        summary: dict[str, Any],
    ) -> list[tuple[str, Any, Any]]:
        rows = await self._repository.load_table(run_dir, "maxima")
        maxima = [
            ShellMaximum(n=int(row["n"]), sites=int(row["sites"]), maximum=float(row["maximum"])) for row in rows
        ]
        pairs: list[tuple[str, Any, Any]] = [
            (f"n={maximum.n}.ratio", row["ratio"], maximum.ratio) for row, maximum in zip(rows, maxima, strict=True)
        ]
        recorded = summary.get("limsup", {})
        for key, value in limsup_summary(maxima, config.model.d).items():
            if isinstance(value, list):
                pairs += [(f"limsup.{key}[{i}]", a, b) for i, (a, b) in enumerate(zip(recorded.get(key, []), value))]
            else:
                pairs.append((f"limsup.{key}", recorded.get(key), value))
        return pairs

    async def _validation_pairs(self, run_dir: Path, summary: dict[str, Any]) -> list[tuple[str, Any, Any]]:
        rows = await self._repository.load_table(run_dir, "validation")
        recorded = summary.get("checks", [])
        pairs: list[tuple[str, Any, Any]] = [("checks", len(recorded), len(rows))]
        for check, row in zip(recorded, rows, strict=False):
            for key in ("measured", "expected", "tolerance", "passed", "required"):
                pairs.append((f"{check['name']}.{key}", check[key], _parse(row[key])))
        required = [_parse(row["passed"]) for row in rows if _parse(row["required"])]
        pairs.append(("passed", summary.get("passed"), all(required)))
        return pairs


async def load_run_report(run_dir: Path, repository: RunRepository) -> RunReport:
    config = await repository.load_config(run_dir)
    summary = await repository.load_summary(run_dir)
    tables = {}
    for artifact in summary.get("artifacts", []):
        path = Path(artifact)
        if path.parent.name == "tables":
            tables[path.stem] = await repository.load_table(run_dir, path.stem)
    return RunReport(config=config, summary=summary, tables=tables)
