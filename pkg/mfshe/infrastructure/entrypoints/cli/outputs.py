import csv
import io
from collections.abc import Iterable
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import typer
from rich.console import Console
from rich.table import Table

console = Console()


def emit_csv(header: Sequence[str], rows: Iterable[Sequence[Any]], out: Path | None) -> None:
    """Writes a CSV table to ``out``, or to stdout without it."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    if out is None:
        typer.echo(buffer.getvalue(), nl=False)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(buffer.getvalue(), encoding="utf-8")
        typer.secho(f"Written to {out}", fg=typer.colors.GREEN, err=True)


def format_value(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def print_rows(title: str, rows: Sequence[dict[str, Any]]) -> None:
    table = Table(title=title)
    columns = list(dict.fromkeys(key for row in rows for key in row))
    for column in columns:
        table.add_column(column, justify="right" if column != "name" else "left", style="cyan")
    for row in rows:
        table.add_row(*(format_value(row.get(column, "")) for column in columns))
    console.print(table)


def print_pairs(title: str, pairs: dict[str, Any]) -> None:
    table = Table(title=title)
    table.add_column("Label", style="cyan")
    table.add_column("Value", justify="right", style="magenta")
    for label, value in pairs.items():
        table.add_row(label, format_value(value))
    console.print(table)
