from abc import ABC
from abc import abstractmethod
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from mfshe.domain.entities.experiment import RunRecord
from mfshe.domain.entities.fractal import PeakSet
from mfshe.domain.schemas.experiment import ExperimentConfig


class RunRepository(ABC):
    """Flat-file persistence of harness runs.

    A run lives in its own directory; tables, peak sets and plot data are addressed by name
    relative to it.
    """

    @abstractmethod
    async def create(self, config: ExperimentConfig) -> Path:
        """Creates (or resets) the run directory of ``config`` and stores the config file in it.

        Returns:
            The run directory.
        """
        ...

    @abstractmethod
    async def save_table(self, run_dir: Path, name: str, rows: Sequence[dict[str, Any]]) -> str:
        """Writes ``rows`` as CSV and returns the relative artifact path."""
        ...

    @abstractmethod
    async def save_peaks(self, run_dir: Path, name: str, peaks: PeakSet) -> str:
        ...

    @abstractmethod
    async def save_plot(self, run_dir: Path, name: str, columns: dict[str, Sequence[float]]) -> str:
        """Writes whitespace-separated columns readable by gnuplot."""
        ...

    @abstractmethod
    async def save_record(self, record: RunRecord) -> str:
        ...

    @abstractmethod
    async def mark_failed(self, run_dir: Path, message: str) -> None:
        ...

    @abstractmethod
    async def load_config(self, run_dir: Path) -> ExperimentConfig:
        """Raises RunNotFoundError when ``run_dir`` holds no run."""
        ...

    @abstractmethod
    async def load_summary(self, run_dir: Path) -> dict[str, Any]:
        ...

    @abstractmethod
    async def load_table(self, run_dir: Path, name: str) -> list[dict[str, str]]:
        ...

    @abstractmethod
    async def load_peaks(self, run_dir: Path, name: str) -> PeakSet:
        ...
