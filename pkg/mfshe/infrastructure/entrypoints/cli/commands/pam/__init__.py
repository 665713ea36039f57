import asyncio
from pathlib import Path

import typer

from mfshe.domain.entities.model import ModelParams
from mfshe.domain.entities.pam import PamConfig
from mfshe.domain.entities.pam import PicardSpec
from mfshe.domain.exceptions import BlowupError
from mfshe.domain.exceptions import CensoringError
from mfshe.domain.exceptions import GeometryError
from mfshe.domain.exceptions import InvalidParametersError
from mfshe.domain.services import pam
from mfshe.domain.types import ItoIncrement
from mfshe.domain.types import NoiseModel
from mfshe.infrastructure.entrypoints.cli.commands.pam.fk import pam_fk_logic
from mfshe.infrastructure.entrypoints.cli.commands.pam.picard import pam_picard_logic
from mfshe.infrastructure.entrypoints.cli.commands.pam.simulate import pam_simulate_logic
from mfshe.infrastructure.entrypoints.cli.commands.pam.simulate import replica_rows
from mfshe.infrastructure.entrypoints.cli.commands.pam.tails import pam_tails_logic
from mfshe.infrastructure.entrypoints.cli.dependencies import get_seed
from mfshe.infrastructure.entrypoints.cli.outputs import emit_csv
from mfshe.infrastructure.entrypoints.cli.outputs import print_pairs
from mfshe.infrastructure.entrypoints.cli.parsers import parse_model

app = typer.Typer()

PAM_ERRORS = (InvalidParametersError, GeometryError, BlowupError, CensoringError)


def build_config(
    params: ModelParams,
    torus_side: float,
    grid_n: int,
    dt: float | None,
    seed: int,
    noise: NoiseModel,
    increment: ItoIncrement,
) -> PamConfig:
    try:
        return pam.configure_pam(
            params, torus_side=torus_side, grid_n=grid_n, dt=dt, seed=seed, noise=noise, increment=increment
        )
    except InvalidParametersError as e:
        raise typer.BadParameter(str(e)) from e


@app.command("simulate", help="Simulate the parabolic Anderson model on a torus, u_0 = 1.")
def simulate(
    alpha: float = typer.Option(..., help="Stability index in (0, 2]"),
    beta: float = typer.Option(..., help="Riesz exponent, 0 < beta < min(alpha, d)"),
    d: int = typer.Option(1, help="Space dimension", min=1),
    t: float = typer.Option(1.0, help="Final time"),
    torus_side: float = typer.Option(32.0, "--L", help="Torus side", min=0.0),
    grid_n: int = typer.Option(128, "--grid", help="Sites per axis", min=2),
    dt: float | None = typer.Option(None, help="Time step, defaults to the largest stable step"),
    replicas: int = typer.Option(1, help="Independent replicas", min=1),
    noise: NoiseModel = typer.Option(NoiseModel.SPECTRAL, help="Noise construction"),
    increment: ItoIncrement = typer.Option(ItoIncrement.EXPONENTIAL, help="Ito increment"),
    seed: int | None = typer.Option(None, help="Seed, defaults to MFSHE_SEED", min=0),
    out: Path | None = typer.Option(None, help="CSV file to write instead of stdout"),
    snapshot: Path | None = typer.Option(None, help="MFSHE1 file for the first replica's final field"),
) -> None:
    params = parse_model(alpha, beta, d, t)
    master = get_seed(seed)
    cfg = build_config(params, torus_side, grid_n, dt, master, noise, increment)
    try:
        run = asyncio.run(pam_simulate_logic(cfg, replicas, master, snapshot))
    except PAM_ERRORS as e:
        typer.secho(f"Error: {e}", fg=typer.colors.RED, err=True)
        raise typer.Exit(code=1) from e

    emit_csv(("replica", "mean", "max", "origin"), replica_rows(run), out)
    if run.positivity_violations:
        typer.secho(f"{run.positivity_violations} nonpositive values", fg=typer.colors.YELLOW, err=True)


@app.command("picard", help="Mean-square gaps between successive localized Picard iterates.")
def picard(
    alpha: float = typer.Option(..., help="Stability index in (0, 2]"),
    beta: float = typer.Option(..., help="Riesz exponent, 0 < beta < min(alpha, d)"),
    d: int = typer.Option(1, help="Space dimension", min=1),
    t: float = typer.Option(0.25, help="Final time"),
    ell: float = typer.Option(..., help="Truncation radius of the kernel", min=0.0),
    m: int = typer.Option(..., help="Number of Picard iterations", min=1),
    torus_side: float = typer.Option(32.0, "--L", help="Torus side", min=0.0),
    grid_n: int = typer.Option(128, "--grid", help="Sites per axis", min=2),
    dt: float | None = typer.Option(None, help="Time step, defaults to the largest stable step"),
    replicas: int = typer.Option(100, help="Independent replicas", min=1),
    coupling: bool = typer.Option(False, "--coupling/--no-coupling", help="Also compare with the full solver"),
    seed: int | None = typer.Option(None, help="Seed, defaults to MFSHE_SEED", min=0),
    out: Path | None = typer.Option(None, help="CSV file to write instead of stdout"),
) -> None:
    """
    Factor noise with linear increments is used, the configuration the iterates converge to.
    """
    params = parse_model(alpha, beta, d, t)
    master = get_seed(seed)
    cfg = build_config(params, torus_side, grid_n, dt, master, NoiseModel.FACTOR, ItoIncrement.LINEAR)
    try:
        spec = PicardSpec(ell=ell, m=m, params=params)
        report = asyncio.run(pam_picard_logic(spec, cfg, replicas, master, coupling=coupling))
    except PAM_ERRORS as e:
        typer.secho(f"Error: {e}", fg=typer.colors.RED, err=True)
        raise typer.Exit(code=1) from e

    emit_csv(
        ("level", "mean_square", "stderr"),
        [(point.level, point.mean_square, point.stderr) for point in report.decay],
        out,
    )
    pairs: dict[str, float | str] = {"Independence range": report.independence_range or "n/a"}
    if report.coupling_error is not None:
        pairs["Coupling error"], pairs["Coupling stderr"] = report.coupling_error
    print_pairs("Picard iterates", pairs)


@app.command("fk", help="Feynman-Kac Monte Carlo estimates of the moments E u_t^k.")
def fk(
    alpha: float = typer.Option(..., help="Stability index in (0, 2]"),
    beta: float = typer.Option(..., help="Riesz exponent, 0 < beta < min(alpha, d)"),
    d: int = typer.Option(1, help="Space dimension", min=1),
    t: float = typer.Option(1.0, help="Time"),
    k: list[int] = typer.Option([2, 3, 4], "--k", help="Moment orders >= 2, repeatable"),
    paths: int = typer.Option(20_000, help="Monte Carlo paths per order", min=2),
    dt_path: float = typer.Option(0.005, "--dtpath", help="Path time step", min=0.0),
    cap: float = typer.Option(1e2, help="Cap on the Riesz kernel, at most 1 / dtpath", min=0.0),
    seed: int | None = typer.Option(None, help="Seed, defaults to MFSHE_SEED", min=0),
    out: Path | None = typer.Option(None, help="CSV file to write instead of stdout"),
) -> None:
    params = parse_model(alpha, beta, d, t)
    if any(order < 2 for order in k):
        raise typer.BadParameter(f"moment orders must be at least 2, got {k}")
    orders = sorted(set(k))
    try:
        estimates = asyncio.run(pam_fk_logic(orders, params, paths, dt_path, cap, get_seed(seed)))
    except PAM_ERRORS as e:
        typer.secho(f"Error: {e}", fg=typer.colors.RED, err=True)
        raise typer.Exit(code=1) from e

    emit_csv(
        ("k", "value", "log_value", "stderr", "n_paths", "cap"),
        [(m.k, m.value, m.log_value, m.stderr, m.n_paths, m.cap) for m in estimates],
        out,
    )
    if len(estimates) >= 2:
        q, _ = pam.intermittency_fit(estimates)
        bracket = pam.moment_bracket(estimates, params)
        print_pairs(
            "Intermittency",
            {
                "Fitted exponent": q,
                "Expected exponent": params.moment_exponent,
                "c lower": bracket.c_lower,
                "c upper": bracket.c_upper,
            },
        )


@app.command("tails", help="Empirical tail P{log u_t(0) >= z} over independent replicas.")
def tails(
    alpha: float = typer.Option(..., help="Stability index in (0, 2]"),
    beta: float = typer.Option(..., help="Riesz exponent, 0 < beta < min(alpha, d)"),
    d: int = typer.Option(1, help="Space dimension", min=1),
    t: float = typer.Option(1.0, help="Time"),
    z_max: float = typer.Option(..., "--zmax", help="Largest level z", min=0.0),
    points: int = typer.Option(11, help="Levels between 0 and zmax", min=2),
    replicas: int = typer.Option(1000, help="Independent replicas", min=1),
    torus_side: float = typer.Option(32.0, "--L", help="Torus side", min=0.0),
    grid_n: int = typer.Option(128, "--grid", help="Sites per axis", min=2),
    dt: float | None = typer.Option(None, help="Time step, defaults to the largest stable step"),
    seed: int | None = typer.Option(None, help="Seed, defaults to MFSHE_SEED", min=0),
    out: Path | None = typer.Option(None, help="CSV file to write instead of stdout"),
) -> None:
    params = parse_model(alpha, beta, d, t)
    master = get_seed(seed)
    cfg = build_config(params, torus_side, grid_n, dt, master, NoiseModel.SPECTRAL, ItoIncrement.EXPONENTIAL)
    try:
        exceedances = asyncio.run(pam_tails_logic(cfg, z_max, points, replicas, master))
    except PAM_ERRORS as e:
        typer.secho(f"Error: {e}", fg=typer.colors.RED, err=True)
        raise typer.Exit(code=1) from e

    emit_csv(
        ("z", "probability", "stderr", "exceedances", "censored"),
        [(p.z, p.probability, p.stderr, p.exceedances, p.censored) for p in exceedances],
        out,
    )
