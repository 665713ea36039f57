import asyncio
import logging
import time
from abc import ABC
from abc import abstractmethod
from collections.abc import Callable
from collections.abc import Iterator
from collections.abc import Sequence
from contextlib import contextmanager
from dataclasses import dataclass
from dataclasses import field
from pathlib import Path
from typing import Any
from typing import Final

from mfshe.domain.entities.experiment import RunRecord
from mfshe.domain.ports.runs import RunRepository
from mfshe.domain.schemas.experiment import ExperimentConfig

logger = logging.getLogger(__name__)

SUMMARY_SCHEMA_VERSION: Final[int] = 1


@dataclass(kw_only=True)
class RunContext:
    """Mutable state of a run in progress; whatever it holds survives a failing stage."""

    config: ExperimentConfig
    directory: Path
    timings: dict[str, float] = field(default_factory=dict)
    artifacts: list[str] = field(default_factory=list)
    summary: dict[str, Any] = field(default_factory=dict)

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        logger.info("Stage started", extra={"stage": name, "run": self.config.id})
        start = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = time.perf_counter() - start
            logger.info("Stage finished", extra={"stage": name, "seconds": self.timings[name]})

    def record(self, failure: str | None = None) -> RunRecord:
        return RunRecord(
            run_id=self.config.id,
            kind=self.config.kind,
            config_hash=self.config.digest(),
            directory=self.directory,
            seed=self.config.seed,
            timings=dict(self.timings),
            artifacts=tuple(self.artifacts),
            summary={"schema_version": SUMMARY_SCHEMA_VERSION, "kind": str(self.config.kind)} | self.summary,
            failure=failure,
        )


class ExperimentUseCase(ABC):
    """Runs one experiment kind, persisting every artifact through the run repository.

    Tasks are pure functions of the config and a derived seed; they run in worker threads, at
    most ``workers`` at a time, and are reduced in submission order.
    """

    def __init__(self, repository: RunRepository, workers: int = 1) -> None:
        if workers < 1:
            raise ValueError(f"workers must be positive, got {workers}")
        self._repository = repository
        self._workers = workers

    async def execute(self, config: ExperimentConfig) -> RunRecord:
        directory = await self._repository.create(config)
        context = RunContext(config=config, directory=directory)
        try:
            await self._run(context)
        except Exception as e:
            logger.exception("Experiment stage failed", extra={"run": config.id, "kind": str(config.kind)})
            message = f"{type(e).__name__}: {e}"
            await self._repository.mark_failed(directory, message)
            await self._repository.save_record(context.record(failure=message))
            raise

        record = context.record()
        await self._repository.save_record(record)
        logger.info("Experiment finished", extra={"run": config.id, "directory": str(directory)})
        return record

    @abstractmethod
    async def _run(self, context: RunContext) -> None: ...

    async def _map[T, R](self, func: Callable[[T], R], items: Sequence[T]) -> list[R]:
        semaphore = asyncio.Semaphore(self._workers)

        async def _call_with_semaphore(item: T) -> R:
            async with semaphore:
                return await asyncio.to_thread(func, item)

        try:
            async with asyncio.TaskGroup() as tg:
                tasks = [tg.create_task(_call_with_semaphore(item)) for item in items]
        except ExceptionGroup as eg:
            # Surface the first task error itself so callers can match on domain exceptions.
            raise eg.exceptions[0] from eg

        return [task.result() for task in tasks]

    async def _save_table(self, context: RunContext, name: str, rows: Sequence[dict[str, Any]]) -> None:
        context.artifacts.append(await self._repository.save_table(context.directory, name, rows))

    async def _save_plot(self, context: RunContext, name: str, columns: dict[str, Sequence[float]]) -> None:
        if context.config.output.plots:
            context.artifacts.append(await self._repository.save_plot(context.directory, name, columns))
