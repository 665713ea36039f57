import asyncio
from pathlib import Path

import typer

from mfshe.domain.exceptions import CorruptFileError
from mfshe.domain.exceptions import InsufficientShellsError
from mfshe.domain.exceptions import InvalidParametersError
from mfshe.domain.exceptions import ShellMembershipError
from mfshe.domain.types import CoverScheme
from mfshe.infrastructure.entrypoints.cli.commands.fractal.cover import cover_rows
from mfshe.infrastructure.entrypoints.cli.commands.fractal.cover import fractal_cover_logic
from mfshe.infrastructure.entrypoints.cli.commands.fractal.cover import fractal_dim_logic
from mfshe.infrastructure.entrypoints.cli.commands.fractal.thick import fractal_thick_logic
from mfshe.infrastructure.entrypoints.cli.outputs import emit_csv
from mfshe.infrastructure.entrypoints.cli.outputs import print_pairs
from mfshe.infrastructure.entrypoints.cli.parsers import parse_float_list

app = typer.Typer()

FRACTAL_ERRORS = (CorruptFileError, InvalidParametersError, ShellMembershipError, InsufficientShellsError, OSError)


@app.command("cover", help="Per-shell cover counts nu_rho of an MFPEAKS peak set.")
def cover(
    path: Path = typer.Option(..., "--in", help="MFPEAKS file"),
    rho_grid: str = typer.Option("0.25,0.5,0.75,1", help="Comma-separated cover exponents rho"),
    scheme: CoverScheme = typer.Option(CoverScheme.UNIT_LATTICE, help="Cover scheme"),
    n_min: int | None = typer.Option(None, help="First shell", min=1),
    n_max: int | None = typer.Option(None, help="Last shell", min=1),
    out: Path | None = typer.Option(None, help="CSV file to write instead of stdout"),
) -> None:
    rhos = parse_float_list(rho_grid)
    try:
        report = asyncio.run(fractal_cover_logic(path, rhos, scheme, n_min, n_max))
    except FRACTAL_ERRORS as e:
        typer.secho(f"Error: {e}", fg=typer.colors.RED, err=True)
        raise typer.Exit(code=1) from e

    header = ("n", "occupied", *(f"nu_{rho:g}" for rho in report.rho_grid))
    emit_csv(header, cover_rows(report), out)


@app.command("dim", help="Macroscopic dimension estimate of an MFPEAKS peak set.")
def dim(
    path: Path = typer.Option(..., "--in", help="MFPEAKS file"),
    rho_grid: str = typer.Option("0.25,0.5,0.75,1", help="Comma-separated cover exponents rho"),
    scheme: CoverScheme = typer.Option(CoverScheme.UNIT_LATTICE, help="Cover scheme"),
    n_min: int | None = typer.Option(None, help="First shell", min=1),
    n_max: int | None = typer.Option(None, help="Last shell", min=1),
) -> None:
    rhos = parse_float_list(rho_grid)
    try:
        estimate = asyncio.run(fractal_dim_logic(path, rhos, scheme, n_min, n_max))
    except FRACTAL_ERRORS as e:
        typer.secho(f"Error: {e}", fg=typer.colors.RED, err=True)
        raise typer.Exit(code=1) from e

    print_pairs(
        "Dimension",
        {
            "Estimate": estimate.value,
            "Band": estimate.band,
            "Stderr": estimate.stderr,
            "Shells": f"{estimate.n_min}..{estimate.n_max}",
            "Degenerate": estimate.degenerate,
        },
    )


@app.command("thick", help="Check that a peak set meets every skeleton cube from a given shell on.")
def thick(
    path: Path = typer.Option(..., "--in", help="MFPEAKS file"),
    theta: float = typer.Option(..., help="Thickness exponent in (0, 1)"),
    start: int = typer.Option(..., "--from-shell", help="First shell checked", min=1),
    end: int | None = typer.Option(None, "--to-shell", help="Last shell checked", min=1),
) -> None:
    try:
        result = asyncio.run(fractal_thick_logic(path, theta, start, end))
    except FRACTAL_ERRORS as e:
        typer.secho(f"Error: {e}", fg=typer.colors.RED, err=True)
        raise typer.Exit(code=1) from e

    if result.thick:
        typer.secho(f"theta-thick over {result.shells_checked} shells", fg=typer.colors.GREEN)
    else:
        typer.secho(
            f"Not theta-thick: empty cube at shell {result.witness_n}, corner {result.witness_x}",
            fg=typer.colors.YELLOW,
        )
