import asyncio
import csv
import json
import logging
import shutil
from collections.abc import Sequence
from pathlib import Path
from typing import Any
from typing import Final

import numpy as np

from mfshe.domain.entities.experiment import RunRecord
from mfshe.domain.entities.fractal import PeakSet
from mfshe.domain.exceptions import CorruptFileError
from mfshe.domain.exceptions import RunNotFoundError
from mfshe.domain.ports.runs import RunRepository
from mfshe.domain.schemas.experiment import ExperimentConfig
from mfshe.infrastructure.adapters.storage.configs import dumps_config
from mfshe.infrastructure.adapters.storage.configs import read_config
from mfshe.infrastructure.adapters.storage.peaks import read_peaks
from mfshe.infrastructure.adapters.storage.peaks import write_peaks

logger = logging.getLogger(__name__)

CONFIG_FILE: Final[str] = "config.toml"
SUMMARY_FILE: Final[str] = "summary.json"
FAILED_FILE: Final[str] = "FAILED"
TABLES_DIR: Final[str] = "tables"
PEAKS_DIR: Final[str] = "peaks"
PLOTS_DIR: Final[str] = "plots"


def run_directory_name(config: ExperimentConfig) -> str:
    return f"{config.id}-{config.digest()[:8]}"


def _to_json(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def _write_table(path: Path, rows: Sequence[dict[str, Any]]) -> None:
    fieldnames = list(dict.fromkeys(key for row in rows for key in row))
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        writer.writerows({key: _cell(value) for key, value in row.items()} for row in rows)


def _cell(value: Any) -> Any:
    if isinstance(value, float | np.floating):
        return repr(float(value))
    if isinstance(value, np.generic):
        return value.item()
    return value


def _write_plot(path: Path, columns: dict[str, Sequence[float]]) -> None:
    lengths = {len(values) for values in columns.values()}
    if len(lengths) > 1:
        raise ValueError(f"plot columns differ in length: {sorted(lengths)}")
    lines = ["# " + " ".join(columns)]
    lines += [" ".join(f"{float(value):.17g}" for value in row) for row in zip(*columns.values(), strict=True)]
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


class FileRunRepository(RunRepository):
    """Run directories ``<root>/<id>-<hash8>/`` holding config, summary, tables, peaks and plots.

    A config with ``output.directory`` set is stored there instead of under ``root``.
    """

    def __init__(self, root: Path) -> None:
        self.root = root

    def directory_for(self, config: ExperimentConfig) -> Path:
        return (config.output.directory or self.root) / run_directory_name(config)

    async def create(self, config: ExperimentConfig) -> Path:
        run_dir = self.directory_for(config)
        await asyncio.to_thread(self._create, run_dir, config)
        logger.info("Run directory ready", extra={"run_dir": str(run_dir)})
        return run_dir

    @staticmethod
    def _create(run_dir: Path, config: ExperimentConfig) -> None:
        if run_dir.exists():
            shutil.rmtree(run_dir)
        run_dir.mkdir(parents=True)
        (run_dir / CONFIG_FILE).write_text(dumps_config(config), encoding="utf-8")

    async def save_table(self, run_dir: Path, name: str, rows: Sequence[dict[str, Any]]) -> str:
        relative = f"{TABLES_DIR}/{name}.csv"
        await asyncio.to_thread(_write_table, run_dir / relative, rows)
        return relative

    async def save_peaks(self, run_dir: Path, name: str, peaks: PeakSet) -> str:
        relative = f"{PEAKS_DIR}/{name}.txt"
        await asyncio.to_thread(write_peaks, run_dir / relative, peaks)
        return relative

    async def save_plot(self, run_dir: Path, name: str, columns: dict[str, Sequence[float]]) -> str:
        relative = f"{PLOTS_DIR}/{name}.dat"
        await asyncio.to_thread(_write_plot, run_dir / relative, columns)
        return relative

    async def save_record(self, record: RunRecord) -> str:
        document = {
            "run_id": record.run_id,
            "kind": str(record.kind),
            "config_hash": record.config_hash,
            "seed": record.seed,
            "timings": record.timings,
            "artifacts": list(record.artifacts),
            "failure": record.failure,
        } | record.summary
        text = json.dumps(document, indent=2, default=_to_json)
        await asyncio.to_thread((record.directory / SUMMARY_FILE).write_text, text + "\n", "utf-8")
        return SUMMARY_FILE

    async def mark_failed(self, run_dir: Path, message: str) -> None:
        await asyncio.to_thread((run_dir / FAILED_FILE).write_text, message + "\n", "utf-8")
        logger.warning("Run marked as failed", extra={"run_dir": str(run_dir)})

    async def load_config(self, run_dir: Path) -> ExperimentConfig:
        path = run_dir / CONFIG_FILE
        if not path.is_file():
            raise RunNotFoundError(f"no run found in {run_dir}")
        return await asyncio.to_thread(read_config, path)

    async def load_summary(self, run_dir: Path) -> dict[str, Any]:
        path = run_dir / SUMMARY_FILE
        if not path.is_file():
            raise RunNotFoundError(f"no summary found in {run_dir}")
        text = await asyncio.to_thread(path.read_text, "utf-8")
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            raise CorruptFileError(f"invalid {SUMMARY_FILE}: {e}") from e

    async def load_table(self, run_dir: Path, name: str) -> list[dict[str, str]]:
        path = run_dir / TABLES_DIR / f"{name}.csv"
        if not path.is_file():
            raise RunNotFoundError(f"no table {name!r} in {run_dir}")
        return await asyncio.to_thread(_read_table, path)

    async def load_peaks(self, run_dir: Path, name: str) -> PeakSet:
        path = run_dir / PEAKS_DIR / f"{name}.txt"
        if not path.is_file():
            raise RunNotFoundError(f"no peak set {name!r} in {run_dir}")
        return await asyncio.to_thread(read_peaks, path)


def _read_table(path: Path) -> list[dict[str, str]]:
    with path.open(encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))
