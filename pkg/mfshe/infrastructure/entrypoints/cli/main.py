from typing import cast

import typer

from mfshe import __version__
from mfshe.infrastructure.config.loggers import configure_loggers
from mfshe.infrastructure.config.settings.app import app_settings
from mfshe.infrastructure.entrypoints.cli.commands import field
from mfshe.infrastructure.entrypoints.cli.commands import fractal
from mfshe.infrastructure.entrypoints.cli.commands import kernels
from mfshe.infrastructure.entrypoints.cli.commands import pam
from mfshe.infrastructure.entrypoints.cli.commands import runs
from mfshe.infrastructure.entrypoints.cli.parsers import parse_log_handlers
from mfshe.infrastructure.config.loggers import LogHandler
from mfshe.infrastructure.config.loggers import LogLevel

app = typer.Typer(
    name="mfshe",
    help="Fractional stochastic heat equation simulations and macroscopic dimension experiments.",
    no_args_is_help=True,
)

app.add_typer(kernels.app, name="kernels", help="Kernel evaluation commands")
app.add_typer(field.app, name="field", help="Gaussian field sampling commands")
app.add_typer(pam.app, name="pam", help="Parabolic Anderson model commands")
app.add_typer(fractal.app, name="fractal", help="Peak set cover and dimension commands")

app.command("run")(runs.run)
app.command("validate")(runs.validate)
app.command("verify")(runs.verify)
app.command("report")(runs.report)


def version_callback(show_version: bool) -> None:
    if show_version:
        typer.echo(f"mfshe Version: {__version__}")
        raise typer.Exit()


@app.callback()
def main(
    log_level: LogLevel = typer.Option(
        app_settings.LOG_LEVEL_CLI,
        "--log-level",
        "-l",
        case_sensitive=False,
        help="Set the logging level.",
    ),
    log_handlers: list[str] = typer.Option(
        app_settings.LOG_HANDLERS_CLI,
        "--log-handlers",
        case_sensitive=True,
        callback=parse_log_handlers,
        help="Set the logging handlers.",
    ),
    version: bool | None = typer.Option(
        None,
        "--version",
        "-v",
        help="Show the application's version and exit.",
        callback=version_callback,
        is_eager=True,
    ),
):
    """Configures logging before any command runs."""
    configure_loggers(level=log_level, handlers=cast(list[LogHandler], log_handlers))


if __name__ == "__main__":
    app()
