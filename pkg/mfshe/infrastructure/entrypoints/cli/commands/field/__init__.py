import asyncio
from pathlib import Path

import typer

from mfshe.domain.entities.field import LatticeSpec
from mfshe.domain.exceptions import EmbeddingFailureError
from mfshe.domain.exceptions import InvalidParametersError
from mfshe.domain.types import SamplerScheme
from mfshe.infrastructure.entrypoints.cli.commands.field.sample import field_sample_logic
from mfshe.infrastructure.entrypoints.cli.commands.field.sample import sample_summary
from mfshe.infrastructure.entrypoints.cli.dependencies import get_seed
from mfshe.infrastructure.entrypoints.cli.outputs import print_pairs
from mfshe.infrastructure.entrypoints.cli.parsers import parse_model
from mfshe.infrastructure.entrypoints.cli.parsers import parse_shape

app = typer.Typer()


@app.command("sample", help="Sample the stationary linear solution Z_t on a lattice into an MFSHE1 file.")
def sample(
    alpha: float = typer.Option(..., help="Stability index in (0, 2]"),
    beta: float = typer.Option(..., help="Riesz exponent, 0 < beta < min(alpha, d)"),
    d: int = typer.Option(1, help="Space dimension", min=1),
    t: float = typer.Option(1.0, help="Time"),
    shape: str = typer.Option(..., help="Comma-separated sites per axis, e.g. 64,64"),
    spacing: float = typer.Option(1.0, help="Lattice spacing", min=0.0),
    scheme: SamplerScheme = typer.Option(SamplerScheme.CIRCULANT_EXACT, help="Sampler"),
    block: int | None = typer.Option(None, help="Block side of the block-independent sampler", min=1),
    padding: int = typer.Option(2, help="Torus padding factor", min=2),
    seed: int | None = typer.Option(None, help="Seed, defaults to MFSHE_SEED", min=0),
    out: Path = typer.Option(..., help="MFSHE1 file to write"),
) -> None:
    params = parse_model(alpha, beta, d, t)
    sites = parse_shape(shape)
    if len(sites) != d:
        raise typer.BadParameter(f"shape needs {d} axes, got {len(sites)}")

    try:
        lattice = LatticeSpec(d=d, origin=(0.0,) * d, spacing=spacing, shape=sites)
        result = asyncio.run(
            field_sample_logic(params, lattice, scheme, get_seed(seed), out, block=block, padding=padding)
        )
    except (InvalidParametersError, EmbeddingFailureError) as e:
        typer.secho(f"Error: {e}", fg=typer.colors.RED, err=True)
        raise typer.Exit(code=1) from e

    typer.secho(f"Field written to {out}", fg=typer.colors.GREEN)
    print_pairs("Field sample", sample_summary(result))
