import asyncio
from pathlib import Path

import typer

from mfshe.domain.exceptions import InvalidParametersError
from mfshe.domain.exceptions import QuadratureNonConvergenceError
from mfshe.domain.exceptions import SingularInputError
from mfshe.domain.types import KernelFunction
from mfshe.infrastructure.entrypoints.cli.commands.kernels.evaluate import kernel_eval_logic
from mfshe.infrastructure.entrypoints.cli.outputs import emit_csv
from mfshe.infrastructure.entrypoints.cli.parsers import parse_float_list
from mfshe.infrastructure.entrypoints.cli.parsers import parse_model

app = typer.Typer()


@app.command("eval", help="Evaluate a kernel function on a radial grid as CSV (input, value).")
def evaluate(
    function: KernelFunction = typer.Argument(..., help="Function to evaluate"),
    alpha: float = typer.Option(..., help="Stability index in (0, 2]"),
    beta: float = typer.Option(..., help="Riesz exponent, 0 < beta < min(alpha, d)"),
    d: int = typer.Option(1, help="Space dimension", min=1),
    t: float = typer.Option(1.0, help="Time (also the density time)"),
    grid: str = typer.Option("0.5,1,2,4", help="Comma-separated radii or frequencies"),
    out: Path | None = typer.Option(None, help="CSV file to write instead of stdout"),
) -> None:
    """
    The input is a radius |x| (or |xi| for the levy and spectral functions), evaluated at the point
    (r, 0, ..., 0).
    """
    params = parse_model(alpha, beta, d, t)
    values = parse_float_list(grid)
    try:
        rows = asyncio.run(kernel_eval_logic(function, params, values))
    except (InvalidParametersError, SingularInputError, QuadratureNonConvergenceError) as e:
        typer.secho(f"Error: {e}", fg=typer.colors.RED, err=True)
        raise typer.Exit(code=1) from e

    emit_csv(("input", "value"), rows, out)
