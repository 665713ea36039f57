import asyncio
import time
from pathlib import Path
from typing import Any

from pydantic import ValidationError

import typer

from mfshe.domain.exceptions import ConfigFileError
from mfshe.domain.exceptions import CorruptFileError
from mfshe.domain.exceptions import RunNotFoundError
from mfshe.domain.schemas.experiment import ExperimentConfig
from mfshe.domain.types import ExperimentKind
from mfshe.infrastructure.entrypoints.cli.commands.runs.run import load_experiment
from mfshe.infrastructure.entrypoints.cli.commands.runs.run import run_logic
from mfshe.infrastructure.entrypoints.cli.commands.runs.verify import report_logic
from mfshe.infrastructure.entrypoints.cli.commands.runs.verify import verify_logic
from mfshe.infrastructure.entrypoints.cli.dependencies import get_workers
from mfshe.infrastructure.entrypoints.cli.outputs import print_pairs
from mfshe.infrastructure.entrypoints.cli.outputs import print_rows


def _load(path: Path, kind: ExperimentKind | None = None) -> ExperimentConfig:
    try:
        return load_experiment(path, kind)
    except ConfigFileError as e:
        typer.secho(f"Error: {e}", fg=typer.colors.RED, err=True)
        raise typer.Exit(code=1) from e
    except ValidationError as e:
        for error in e.errors():
            location = ".".join(str(part) for part in error["loc"]) or "config"
            typer.secho(f"{location}: {error['msg']}", fg=typer.colors.RED, err=True)
        raise typer.Exit(code=1) from e


def _execute(config: ExperimentConfig, workers: int | None, output_dir: Path | None) -> dict[str, Any]:
    start_time = time.perf_counter()
    try:
        record = asyncio.run(run_logic(config, get_workers(workers), output_dir))
    except Exception as e:
        typer.secho(f"Error: {e}", fg=typer.colors.RED, err=True)
        raise typer.Exit(code=1) from e

    duration = time.perf_counter() - start_time
    typer.secho(f"\nRun {record.run_id} finished in {duration:.2f}s: {record.directory}\n", fg=typer.colors.GREEN)
    print_pairs("Stage timings (s)", record.timings)
    return record.summary


def run(
    config_path: Path = typer.Argument(..., help="TOML experiment config"),
    workers: int | None = typer.Option(None, help="Parallel tasks, defaults to MFSHE_WORKERS", min=1),
    output_dir: Path | None = typer.Option(None, help="Root of the run directories, defaults to MFSHE_OUTPUT_DIR"),
) -> None:
    """
    Run the experiment described by a config file and persist it under <output>/<id>-<hash8>/.
    """
    summary = _execute(_load(config_path), workers, output_dir)
    if "estimates" in summary:
        print_rows("Dimension estimates", summary["estimates"])
    if "limsup" in summary:
        print_pairs("Normalized maxima", {k: v for k, v in summary["limsup"].items() if not isinstance(v, list)})


def validate(
    config_path: Path = typer.Argument(..., help="TOML experiment config"),
    workers: int | None = typer.Option(None, help="Parallel tasks, defaults to MFSHE_WORKERS", min=1),
    output_dir: Path | None = typer.Option(None, help="Root of the run directories, defaults to MFSHE_OUTPUT_DIR"),
) -> None:
    """
    Run the acceptance suite with the seed and Monte Carlo sizes of a config file. Exits with 1 when a
    required check fails.
    """
    summary = _execute(_load(config_path, ExperimentKind.VALIDATION), workers, output_dir)
    print_rows("Validation", summary["checks"])
    if not summary["passed"]:
        typer.secho("Validation failed.", fg=typer.colors.RED, err=True)
        raise typer.Exit(code=1)
    typer.secho("All required checks passed.", fg=typer.colors.GREEN)


def verify(run_dir: Path = typer.Argument(..., help="Run directory")) -> None:
    """
    Recompute the summary of a run from its persisted raw files. Exits with 1 on any mismatch.
    """
    try:
        report = asyncio.run(verify_logic(run_dir))
    except (RunNotFoundError, CorruptFileError, ConfigFileError) as e:
        typer.secho(f"Error: {e}", fg=typer.colors.RED, err=True)
        raise typer.Exit(code=1) from e

    if not report.ok:
        print_rows(
            "Mismatches",
            [{"quantity": m.quantity, "recorded": m.recorded, "recomputed": m.recomputed} for m in report.mismatches],
        )
        raise typer.Exit(code=1)
    typer.secho(f"{report.checked} quantities verified.", fg=typer.colors.GREEN)


def report(run_dir: Path = typer.Argument(..., help="Run directory")) -> None:
    """
    Print the persisted summary and tables of a run.
    """
    try:
        run_report = asyncio.run(report_logic(run_dir))
    except (RunNotFoundError, CorruptFileError, ConfigFileError) as e:
        typer.secho(f"Error: {e}", fg=typer.colors.RED, err=True)
        raise typer.Exit(code=1) from e

    summary = run_report.summary
    print_pairs(
        f"Run {run_report.config.id}",
        {
            "Kind": summary.get("kind", ""),
            "Seed": summary.get("seed", ""),
            "Config hash": summary.get("config_hash", ""),
            "Failure": summary.get("failure") or "none",
        },
    )
    for name, rows in run_report.tables.items():
        print_rows(name, rows)
